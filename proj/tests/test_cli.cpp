#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct RunResult {
    int code = -1;
    std::string out;
};

fs::path scratch_root() {
    static const fs::path root = [] {
        fs::path p = fs::temp_directory_path() /
                     ("sdsforge-cli-" + std::to_string(::getpid()));
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return root;
}

fs::path scratch(const std::string& name) {
    const fs::path dir = scratch_root() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(bool(in));
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void spit(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    REQUIRE(bool(out));
    out << content;
}

RunResult run(const std::string& args, const std::string& env = "") {
    static int counter = 0;
    const fs::path outfile =
        scratch_root() / ("out-" + std::to_string(++counter) + ".txt");
    const std::string cmd = (env.empty() ? "" : env + " ") + SDSFORGE_CLI_PATH +
                            " " + args + " >" + outfile.string() + " 2>&1";
    const int rc = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    r.out = slurp(outfile);
    return r;
}

bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}

const std::string kCert7 =
    "v=7\n"
    "H=2\n"
    "params=7;3,3,3,6;8\n"
    "J=1\n"
    "K=3\n"
    "L=1\n"
    "M=1 3\n"
    "skew=1\n";

} // namespace

TEST_CASE("params") {
    const RunResult r = run("params 9");
    CHECK(r.code == 0);
    CHECK(contains(r.out, "decompositions=1"));
    CHECK(contains(r.out, "9;3,3,3,3;3;----;3,3,3,3"));
    CHECK(contains(r.out, "9;6,6,6,6;15;++++;3,3,3,3"));

    const RunResult r213 = run("params 213");
    CHECK(r213.code == 0);
    CHECK(contains(r213.out, "213;92,105,106,106;196;----;29,3,1,1"));

    CHECK(run("params 8").code == 3);       // even order
    CHECK(run("params").code == 3);         // missing everywhere
    const RunResult feas = run("params 213 --generators 37");
    CHECK(feas.code == 0);
    CHECK(contains(feas.out, ";feasible="));
}

TEST_CASE("orbits") {
    const RunResult r = run("orbits 7 --generators 2");
    CHECK(r.code == 0);
    CHECK(contains(r.out, "subgroup_order=3"));
    CHECK(contains(r.out, "orbits=2"));
    CHECK(contains(r.out, "classes=1"));
    CHECK(contains(r.out, "1: 1 2 4"));
    CHECK(contains(r.out, "3: 3 5 6"));

    const fs::path dir = scratch("orbits");
    const RunResult w =
        run("orbits 7 --generators 2 --out " + (dir / "tables.txt").string());
    CHECK(w.code == 0);
    CHECK(slurp(dir / "tables.txt") == w.out);

    CHECK(run("orbits 9 --generators 3").code == 3); // 3 is not a unit mod 9
}

TEST_CASE("gen writes shared file pairs and a manifest") {
    const fs::path dir = scratch("gen");
    const RunResult r =
        run("gen --v 7 --generators 2 --k 3,3,3,6 --skew 1 --budget 10 "
            "--seed 1 --out " + dir.string());
    CHECK(r.code == 0);
    // the two plain k=3 blocks share one pair: F1 (skew), F2, F4
    CHECK(fs::exists(dir / "F1.txt"));
    CHECK(fs::exists(dir / "F2.txt"));
    CHECK(!fs::exists(dir / "F3.txt"));
    CHECK(fs::exists(dir / "F4.txt"));
    CHECK(fs::exists(dir / "F1_prime.txt"));
    CHECK(fs::exists(dir / "F1.hdr"));

    const std::string man = slurp(dir / "gen_manifest.txt");
    CHECK(contains(man, "block1=F1"));
    CHECK(contains(man, "block2=F2"));
    CHECK(contains(man, "block3=F2"));
    CHECK(contains(man, "block4=F4"));
    CHECK(contains(man, "F1.lines=2"));
    CHECK(contains(man, "F2.lines=2"));
    CHECK(contains(man, "F4.lines=1"));
    CHECK(contains(man, "lambda=8"));

    // the full space for k=3 is {1},{3}; for k=6 it is {1,3}
    CHECK(slurp(dir / "F1.txt") == "1\n3\n");
    CHECK(slurp(dir / "F2.txt") == "1\n3\n");
    CHECK(slurp(dir / "F4.txt") == "1 3\n");
    CHECK(slurp(dir / "F1_prime.txt") == "1\n1\n");
    CHECK(slurp(dir / "F4_prime.txt") == "5\n");

    // bad parameters are rejected up front
    CHECK(run("gen --v 7 --generators 2 --k 3,3,3,3 --budget 4 --out " +
              dir.string())
              .code == 3); // identity fails
    CHECK(run("gen --v 7 --generators 2 --k 1,1,1,6 --budget 4 --out " +
              dir.string())
              .code == 3);
}

TEST_CASE("gen determinism") {
    const fs::path d1 = scratch("gen-a");
    const fs::path d2 = scratch("gen-b");
    const std::string good =
        "gen --v 7 --generators 2 --k 3,3,3,6 --skew 1 --budget 10 --seed 9 "
        "--out ";
    CHECK(run(good + d1.string()).code == 0);
    CHECK(run(good + d2.string()).code == 0);
    for (const char* name :
         {"F1.txt", "F1_prime.txt", "F1.hdr", "F2.txt", "F4.txt"})
        CHECK(slurp(d1 / name) == slurp(d2 / name));
}

TEST_CASE("bundled-certificate parameters and large-v gen layout") {
    // the parameter sets behind the bundled certificates show up in params
    const RunResult p251 = run("params 251");
    CHECK(p251.code == 0);
    CHECK(contains(p251.out, "251;115,115,120,125;224;----;21,21,11,1"));
    const RunResult p631 = run("params 631");
    CHECK(p631.code == 0);
    CHECK(contains(p631.out, "631;330,330,330,315;674;+++-;29,29,29,1"));

    // three equal block sizes collapse onto a single file pair
    const fs::path dir = scratch("gen-631");
    const RunResult g =
        run("gen --v 631 --generators 8 --k 315,330,330,330 --budget 2 "
            "--seed 1 --out " + dir.string());
    CHECK(g.code == 0);
    CHECK(contains(g.out, "2 file pair(s)"));
    CHECK(fs::exists(dir / "F2.txt"));
    CHECK(!fs::exists(dir / "F3.hdr"));
    const std::string man = slurp(dir / "gen_manifest.txt");
    CHECK(contains(man, "block2=F2"));
    CHECK(contains(man, "block3=F2"));
    CHECK(contains(man, "block4=F2"));

    // a zero budget still writes the full artifact set, just empty
    const fs::path zero = scratch("gen-zero");
    CHECK(run("gen --v 7 --generators 2 --k 3,3,3,6 --skew 1 --budget 0 "
              "--seed 1 --out " + zero.string())
              .code == 0);
    CHECK(slurp(zero / "F1.txt").empty());
    CHECK(slurp(zero / "F1_prime.txt").empty());
    CHECK(contains(slurp(zero / "F1.hdr"), "lines=0"));
    CHECK(contains(slurp(zero / "F4.hdr"), "lines=0"));
}

TEST_CASE("match, certify, verify pipeline") {
    const fs::path dir = scratch("pipeline");
    REQUIRE(run("gen --v 7 --generators 2 --k 3,3,3,6 --skew 1 --budget 10 "
                "--seed 1 --out " + dir.string())
                .code == 0);
    const std::string files = (dir / "F1").string() + "," +
                              (dir / "F2").string() + "," +
                              (dir / "F2").string() + "," +
                              (dir / "F4").string();

    const RunResult m = run("match --files " + files + " --lambda 8 --out " +
                            dir.string());
    CHECK(m.code == 0);
    // every combination matches: 2 * 2 * 2 * 1
    std::istringstream lines(slurp(dir / "matches.txt"));
    std::string line;
    int count = 0;
    while (std::getline(lines, line))
        if (!line.empty()) ++count;
    CHECK(count == 8);

    const std::string man = slurp(dir / "match_manifest.txt");
    CHECK(contains(man, "mixer=wang64"));
    CHECK(contains(man, "mode=packed"));
    CHECK(contains(man, "lambda=8"));
    CHECK(contains(man, "coefficients=0x"));
    const std::string rep = slurp(dir / "match_report.txt");
    CHECK(contains(rep, "results=8"));
    CHECK(contains(rep, "verified=1"));

    // --first keeps only the lowest quadruple
    const fs::path first_dir = scratch("pipeline-first");
    const RunResult f = run("match --files " + files +
                            " --lambda 8 --first --out " + first_dir.string());
    CHECK(f.code == 0);
    CHECK(slurp(first_dir / "matches.txt") == "1 1 1 1\n");

    // an unreachable target exits 1 with an empty result file
    const fs::path empty_dir = scratch("pipeline-empty");
    const RunResult none = run("match --files " + files +
                               " --lambda 9 --out " + empty_dir.string());
    CHECK(none.code == 1);
    CHECK(slurp(empty_dir / "matches.txt").empty());

    // certify from explicit line numbers
    const RunResult c = run("certify --files " + files +
                            " --lines 1,1,1,1 --out " + dir.string());
    CHECK(c.code == 0);
    CHECK(contains(c.out, "PASS"));
    CHECK(contains(c.out, "skew-Hadamard"));
    const std::string crep = slurp(dir / "certify_report.txt");
    CHECK(contains(crep, "order=28"));
    CHECK(contains(crep, "hadamard=1"));
    CHECK(contains(crep, "skew_matrix=1"));
    CHECK(fs::exists(dir / "certificate.txt"));
    CHECK(fs::exists(dir / "matrix.txt"));
    CHECK(fs::exists(dir / "matrix.bin"));

    // certify via the matches file picks the same quadruple
    const fs::path alt = scratch("pipeline-alt");
    const RunResult c2 = run("certify --files " + files + " --matches " +
                             (dir / "matches.txt").string() + " --index 1 " +
                             "--out " + alt.string());
    CHECK(c2.code == 0);
    CHECK(slurp(alt / "certificate.txt") == slurp(dir / "certificate.txt"));
    CHECK(slurp(alt / "matrix.bin") == slurp(dir / "matrix.bin"));

    // verify accepts all three artifact forms
    CHECK(run("verify " + (dir / "certificate.txt").string()).code == 0);
    const RunResult vm = run("verify " + (dir / "matrix.txt").string());
    CHECK(vm.code == 0);
    CHECK(contains(vm.out, "order=28 hadamard=1 skew=1"));
    CHECK(run("verify " + (dir / "matrix.bin").string()).code == 0);

    // out-of-range line numbers are usage errors
    CHECK(run("certify --files " + files + " --lines 1,1,1,99 --out " +
              scratch("pipeline-bad").string())
              .code == 3);

    // a wrong block combination fails verification with exit 2
    const std::string bad_files = (dir / "F1").string() + "," +
                                  (dir / "F2").string() + "," +
                                  (dir / "F2").string() + "," +
                                  (dir / "F2").string();
    const RunResult bad = run("certify --files " + bad_files +
                              " --lines 1,1,1,1 --out " +
                              scratch("pipeline-bad2").string());
    CHECK(bad.code == 2);
    CHECK(contains(bad.out, "FAIL"));
}

TEST_CASE("shard ranges partition the search") {
    const fs::path dir = scratch("ranges");
    REQUIRE(run("gen --v 7 --generators 2 --k 3,3,3,6 --skew 1 "
                "--budgets 2,2,2,1 --seed 1 --out " + dir.string())
                .code == 0);
    const std::string files = (dir / "F1").string() + "," +
                              (dir / "F2").string() + "," +
                              (dir / "F2").string() + "," +
                              (dir / "F4").string();
    const RunResult whole = run("match --files " + files +
                                " --lambda 8 --shards 8 --out " +
                                (dir / "all").string());
    CHECK(whole.code == 0);

    std::string merged;
    int nonempty = 0;
    for (const char* range : {"0..4", "4..8"}) {
        const fs::path sub = dir / range;
        const RunResult part =
            run("match --files " + files + " --lambda 8 --shards 8 "
                "--shard-range " + std::string(range) + " --out " +
                sub.string());
        const std::string text = slurp(sub / "matches.txt");
        CHECK(part.code == (text.empty() ? 1 : 0));
        if (!text.empty()) ++nonempty;
        merged += text;
        const std::string man = slurp(sub / "match_manifest.txt");
        CHECK(contains(man, "shard_lo=" + std::string(1, range[0])));
    }
    CHECK(nonempty >= 1);
    // for this tiny instance every match hashes into one half, so plain
    // concatenation stays sorted; equality with the full run is the point
    CHECK(merged == slurp(dir / "all" / "matches.txt"));
}

TEST_CASE("config file and overrides") {
    const fs::path dir = scratch("config");
    spit(dir / "run.cfg",
         "# pipeline settings\n"
         "v=7\n"
         "generators=2\n"
         "k=3,3,3,6\n"
         "skew=1\n"
         "budget=10\n"
         "seed=1\n"
         "out=" + (dir / "files").string() + "\n");
    const RunResult g =
        run("--config " + (dir / "run.cfg").string() + " gen");
    CHECK(g.code == 0);
    CHECK(fs::exists(dir / "files" / "F1.txt"));

    // --set overrides the config; flags override both
    const RunResult g2 = run("--config " + (dir / "run.cfg").string() +
                             " --set seed=2 gen --out " +
                             (dir / "files2").string());
    CHECK(g2.code == 0);
    CHECK(contains(slurp(dir / "files2" / "gen_manifest.txt"), "seed=2"));

    spit(dir / "bad.cfg", "v=7\nbanana=1\n");
    CHECK(run("--config " + (dir / "bad.cfg").string() + " params").code == 3);
    CHECK(run("--config " + (dir / "missing.cfg").string() + " params 9").code ==
          3);
}

TEST_CASE("worker count comes from the environment unless given") {
    const fs::path dir = scratch("workers");
    REQUIRE(run("gen --v 7 --generators 2 --k 3,3,3,6 --skew 1 --budget 10 "
                "--seed 3 --out " + dir.string())
                .code == 0);
    const std::string files = (dir / "F1").string() + "," +
                              (dir / "F2").string() + "," +
                              (dir / "F2").string() + "," +
                              (dir / "F4").string();

    const RunResult env = run("match --files " + files + " --lambda 8 --out " +
                                  (dir / "m1").string(),
                              "SDSFORGE_WORKERS=2");
    CHECK(env.code == 0);
    CHECK(contains(slurp(dir / "m1" / "match_manifest.txt"), "workers=2"));

    const RunResult flag = run("match --files " + files +
                                   " --lambda 8 --workers 1 --out " +
                                   (dir / "m2").string(),
                               "SDSFORGE_WORKERS=2");
    CHECK(flag.code == 0);
    CHECK(contains(slurp(dir / "m2" / "match_manifest.txt"), "workers=1"));

    // the result set is identical either way
    CHECK(slurp(dir / "m1" / "matches.txt") == slurp(dir / "m2" / "matches.txt"));
}

TEST_CASE("certificate injection plants all four blocks") {
    const fs::path dir = scratch("inject");
    spit(dir / "seed-cert.txt", kCert7);
    const RunResult g =
        run("gen --v 7 --generators 2 --k 3,3,3,6 --skew 1 --budget 2 "
            "--seed 7 --inject " + (dir / "seed-cert.txt").string() +
            " --out " + dir.string());
    CHECK(g.code == 0);
    const std::string man = slurp(dir / "gen_manifest.txt");
    CHECK(contains(man, "F1.injected=1"));
    CHECK(contains(man, "F2.injected=2"));
    CHECK(contains(man, "F4.injected=1"));

    const std::string files = (dir / "F1").string() + "," +
                              (dir / "F2").string() + "," +
                              (dir / "F2").string() + "," +
                              (dir / "F4").string();
    const RunResult m = run("match --files " + files + " --lambda 8 --first " +
                            "--out " + dir.string());
    CHECK(m.code == 0);
    const RunResult c = run("certify --files " + files + " --matches " +
                            (dir / "matches.txt").string() + " --out " +
                            dir.string());
    CHECK(c.code == 0);
    CHECK(contains(c.out, "skew-Hadamard"));

    // a certificate whose blocks are not orbit unions of the requested
    // subgroup is rejected up front
    const RunResult wrong =
        run("gen --v 7 --generators 6 --k 3,3,3,6 --budget 2 --seed 7 "
            "--inject " + (dir / "seed-cert.txt").string() + " --out " +
            (dir / "again").string());
    CHECK(wrong.code == 3);
}

TEST_CASE("verify rejects junk") {
    const fs::path dir = scratch("junk");
    spit(dir / "junk.txt", "this is not a certificate\n");
    CHECK(run("verify " + (dir / "junk.txt").string()).code == 3);
    CHECK(run("verify " + (dir / "absent.txt").string()).code == 3);

    // a non-Hadamard sign matrix fails with exit 2
    spit(dir / "flat.txt", "++\n++\n");
    const RunResult flat = run("verify " + (dir / "flat.txt").string());
    CHECK(flat.code == 2);
    CHECK(contains(flat.out, "hadamard=0"));
}
