#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sdsforge/blockgen.hpp"
#include "sdsforge/certio.hpp"
#include "sdsforge/hadamard.hpp"
#include "sdsforge/matcher.hpp"
#include "sdsforge/params.hpp"
#include "sdsforge/rng.hpp"
#include "sdsforge/version.hpp"
#include "sdsforge/zmod.hpp"

namespace fs = std::filesystem;
using namespace sdsforge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNoMatch = 1;
constexpr int kExitVerifyFail = 2;
constexpr int kExitUsage = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

const std::set<std::string> kKnownKeys = {
    "v",      "generators", "k",       "lambda",      "skew",    "budget",
    "budgets", "seed",      "out",     "inject",      "files",   "shards",
    "shard_range", "workers", "first", "lines",       "matches", "index",
    "input",
};

std::map<std::string, std::string> load_config(const std::string& path,
                                               const std::vector<std::string>& sets) {
    std::map<std::string, std::string> kv;
    auto put = [&](std::string line, const std::string& where) {
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty()) return;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError(where + ": expected key=value, got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (!kKnownKeys.count(key))
            throw UsageError(where + ": unknown key '" + key + "'");
        kv[key] = val;
    };
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw UsageError("cannot open config file " + path);
        std::string line;
        int n = 0;
        while (std::getline(in, line)) put(line, path + ":" + std::to_string(++n));
    }
    for (const auto& s : sets) put(s, "--set");
    return kv;
}

// flag value if given on the command line, else config key, else fallback
class Settings {
public:
    explicit Settings(std::map<std::string, std::string> kv) : kv_(std::move(kv)) {}

    bool provided(const CLI::Option* opt, const std::string& key) const {
        return (opt && opt->count() > 0) || kv_.count(key) > 0;
    }
    std::string get(const CLI::Option* opt, const std::string& flag,
                    const std::string& key,
                    std::optional<std::string> fallback = std::nullopt) const {
        if (opt && opt->count() > 0) return flag;
        if (const auto it = kv_.find(key); it != kv_.end()) return it->second;
        if (fallback) return *fallback;
        throw UsageError("missing required setting '" + key +
                         "' (give it in the config file or as a flag)");
    }

private:
    std::map<std::string, std::string> kv_;
};

uint64_t parse_u64(const std::string& s, const std::string& what) {
    try {
        size_t pos = 0;
        if (s.empty() || s[0] == '-') throw std::invalid_argument(s);
        const unsigned long long x = std::stoull(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return x;
    } catch (const std::exception&) {
        throw UsageError(what + ": expected a non-negative integer, got '" + s + "'");
    }
}

uint32_t parse_u32(const std::string& s, const std::string& what) {
    const uint64_t x = parse_u64(s, what);
    if (x > UINT32_MAX) throw UsageError(what + ": value too large: " + s);
    return uint32_t(x);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    if (out.size() == 1 && out[0].empty()) out.clear();
    return out;
}

std::vector<uint32_t> parse_u32_list(const std::string& s, const std::string& what) {
    std::vector<uint32_t> out;
    for (const auto& part : split(s, ',')) out.push_back(parse_u32(part, what));
    return out;
}

std::vector<uint64_t> parse_u64_list(const std::string& s, const std::string& what) {
    std::vector<uint64_t> out;
    for (const auto& part : split(s, ',')) out.push_back(parse_u64(part, what));
    return out;
}

bool parse_bool(const std::string& s, const std::string& what) {
    if (s == "1" || s == "true") return true;
    if (s == "0" || s == "false") return false;
    throw UsageError(what + ": expected 0/1/true/false, got '" + s + "'");
}

std::pair<uint64_t, uint64_t> parse_range(const std::string& s) {
    const auto dots = s.find("..");
    if (dots == std::string::npos)
        throw UsageError("shard_range: expected lo..hi, got '" + s + "'");
    return {parse_u64(trim(s.substr(0, dots)), "shard_range lo"),
            parse_u64(trim(s.substr(dots + 2)), "shard_range hi")};
}

int resolve_workers(const CLI::Option* opt, const std::string& flag,
                    const Settings& s) {
    if (opt && opt->count() > 0) return int(parse_u64(flag, "workers"));
    if (const char* env = std::getenv("SDSFORGE_WORKERS"))
        return int(parse_u64(env, "SDSFORGE_WORKERS"));
    return int(parse_u64(s.get(nullptr, "", "workers", std::string("0")), "workers"));
}

template <typename T>
std::string join(const std::vector<T>& xs, const char* sep = ",") {
    std::ostringstream out;
    for (size_t i = 0; i < xs.size(); ++i) {
        if (i) out << sep;
        out << xs[i];
    }
    return out.str();
}

std::string hex64(uint64_t x) {
    std::ostringstream out;
    out << "0x" << std::hex << x;
    return out.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UsageError("cannot write " + path.string());
    out << content;
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - t0)
        .count();
}

// ---------------------------------------------------------------- params --

int cmd_params(uint32_t v, const std::optional<std::vector<uint32_t>>& gens) {
    const auto decs = four_squares_decompositions(v);
    std::cout << "# v=" << v << " decompositions=" << decs.size() << "\n";

    std::optional<OrbitTable> table;
    if (gens) table.emplace(orbit_table(Modulus(v), subgroup_closure(Modulus(v), *gens)));

    std::set<std::string> seen;
    uint64_t rejected = 0;
    for (const auto& d : decs) {
        for (uint32_t mask = 0; mask < 16; ++mask) {
            SignChoice signs{};
            for (int i = 0; i < 4; ++i) signs[i] = (mask >> i) & 1;
            ParameterSet ps;
            try {
                ps = make_parameter_set(d, signs);
            } catch (const NonPositiveLambda&) {
                ++rejected;
                continue;
            }
            std::string line = report_line(ps);
            if (table) {
                const OrbitFeasibility f = orbit_feasible(ps, *table);
                line += ";feasible=";
                for (int i = 0; i < 4; ++i) line += f.feasible[i] ? '+' : '-';
            }
            if (seen.insert(line).second) std::cout << line << "\n";
        }
    }
    std::cout << "# parameter-sets=" << seen.size() << " rejected=" << rejected
              << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- orbits --

int cmd_orbits(uint32_t v, const std::vector<uint32_t>& gens,
               const std::string& out_path) {
    const Modulus mod(v);
    const UnitSubgroup H = subgroup_closure(mod, gens);
    const OrbitTable table = orbit_table(mod, H);
    const SymClassTable classes = sym_class_table(mod, H);

    std::ostringstream out;
    out << "v=" << v << "\n";
    out << "generators=" << join(gens) << "\n";
    out << "subgroup_order=" << H.order() << "\n";
    out << "orbits=" << table.nontrivial_count() << "\n";
    out << "classes=" << classes.class_count() << "\n";
    out << "class_labels=" << join(classes.class_labels()) << "\n";
    out << "# orbits (label: members)\n" << to_text(table);
    out << "# classes (label: members)\n" << to_text(classes);

    std::cout << out.str();
    if (!out_path.empty()) write_file(out_path, out.str());
    return kExitOk;
}

// ------------------------------------------------------------------- gen --

struct GenPair {
    uint32_t k = 0;
    bool skew = false;
    uint64_t budget = 0;
    uint64_t seed = 0;
    std::string base;
    std::vector<int> positions;              // 0-based block positions served
    std::vector<BlockCandidate> inject;      // candidates forced into the file
    std::vector<uint64_t> inject_at;         // sorted line indices for them
    uint64_t lines = 0;
    bool exhaustive = false;
};

int cmd_gen(uint32_t v, const std::vector<uint32_t>& gens,
            const std::array<uint32_t, 4>& k, std::optional<uint32_t> lambda_given,
            bool skew, const std::array<uint64_t, 4>& budgets, uint64_t seed,
            const std::string& out_dir, const std::optional<std::string>& inject) {
    const uint64_t ksum = uint64_t(k[0]) + k[1] + k[2] + k[3];
    if (ksum <= v)
        throw UsageError("lambda = k1+k2+k3+k4 - v must be positive");
    const uint32_t lambda = uint32_t(ksum - v);
    if (lambda_given && *lambda_given != lambda)
        throw UsageError("lambda=" + std::to_string(*lambda_given) +
                         " contradicts sum(k)-v=" + std::to_string(lambda));
    uint64_t pair_count = 0;
    for (uint32_t ki : k) pair_count += uint64_t(ki) * (ki - 1);
    if (pair_count != uint64_t(lambda) * (v - 1))
        throw UsageError("parameters violate sum k_i(k_i-1) == lambda(v-1)");

    const Modulus mod(v);
    const UnitSubgroup H = subgroup_closure(mod, gens);
    const OrbitTable table = orbit_table(mod, H);
    const SymClassTable classes = sym_class_table(mod, H);
    const DiffAccumulator acc(table, classes);

    // identical (cardinality, skew) settings share one file pair
    std::vector<GenPair> pairs;
    std::array<int, 4> pair_of{};
    for (int pos = 0; pos < 4; ++pos) {
        const bool want_skew = skew && pos == 0;
        int found = -1;
        for (size_t i = 0; i < pairs.size(); ++i)
            if (pairs[i].k == k[pos] && pairs[i].skew == want_skew) found = int(i);
        if (found < 0) {
            GenPair p;
            p.k = k[pos];
            p.skew = want_skew;
            p.budget = budgets[pos];
            p.seed = seed ^ (0x9e3779b97f4a7c15ull * uint64_t(pos + 1));
            p.base = "F" + std::to_string(pos + 1);
            found = int(pairs.size());
            pairs.push_back(std::move(p));
        } else if (pairs[found].budget != budgets[pos]) {
            throw UsageError("blocks sharing a file pair must share a budget");
        }
        pairs[found].positions.push_back(pos);
        pair_of[pos] = found;
    }

    // optional injection: place the blocks of a known certificate at seeded
    // line positions so a downstream match is guaranteed to exist
    if (inject) {
        const SdsCertificate cert = read_certificate_file(*inject);
        if (cert.v != v)
            throw UsageError("inject certificate has v=" + std::to_string(cert.v));
        const SdsReport rep = verify_sds(cert);
        if (!rep.pass)
            throw UsageError("inject certificate fails verification: " +
                             rep.summary());
        std::array<BlockCandidate, 4> cands;
        for (int b = 0; b < 4; ++b) {
            std::set<uint32_t> labels;
            for (uint32_t r : rep.blocks[b]) labels.insert(table.label_of(r));
            cands[b] = make_candidate(
                table, std::vector<uint32_t>(labels.begin(), labels.end()));
            if (cands[b].members != rep.blocks[b])
                throw UsageError("certificate block " + std::to_string(b + 1) +
                                 " is not a union of orbits of the subgroup");
        }
        // assign certificate blocks to positions by cardinality; position 0
        // goes first so the skew slot cannot lose its block, and plain slots
        // prefer non-skew blocks to keep skew ones available
        std::array<bool, 4> used{};
        for (int pos = 0; pos < 4; ++pos) {
            const bool want_skew = skew && pos == 0;
            int chosen = -1;
            for (int prefer_plain = 1; prefer_plain >= 0 && chosen < 0;
                 --prefer_plain) {
                for (int b = 0; b < 4 && chosen < 0; ++b) {
                    if (used[b] || cands[b].members.size() != k[pos]) continue;
                    const bool bskew = is_skew_set(v, cands[b].members);
                    if (want_skew && !bskew) continue;
                    if (!want_skew && prefer_plain && bskew) continue;
                    chosen = b;
                }
                if (want_skew) break; // one pass: only skew blocks qualify
            }
            if (chosen < 0)
                throw UsageError("no certificate block fits position " +
                                 std::to_string(pos + 1) + " (k=" +
                                 std::to_string(k[pos]) +
                                 (want_skew ? ", skew" : "") + ")");
            used[chosen] = true;
            pairs[pair_of[pos]].inject.push_back(cands[chosen]);
        }
        std::mt19937_64 irng(seed ^ 0x5851f42d4c957f2dull);
        for (auto& p : pairs) {
            const uint64_t m = p.inject.size();
            if (m == 0) continue;
            if (p.budget < m)
                throw UsageError("budget for " + p.base +
                                 " too small for injection");
            std::set<uint64_t> at;
            while (at.size() < m) at.insert(uniform_below(irng, p.budget));
            p.inject_at.assign(at.begin(), at.end());
        }
    }

    fs::create_directories(out_dir);
    for (auto& p : pairs) {
        GenOptions g;
        g.cardinality = p.k;
        g.skew = p.skew;
        g.budget = p.budget - p.inject.size();
        g.seed = p.seed;
        CandidateStream stream(table, g);
        for (const auto& c : p.inject) stream.reserve(c);
        p.exhaustive = stream.exhaustive();

        std::ostringstream fb, fd;
        PairWriter w(fb, fd);
        size_t next_inject = 0;
        for (uint64_t line = 0; line < p.budget; ++line) {
            if (next_inject < p.inject_at.size() &&
                p.inject_at[next_inject] == line) {
                const auto& c = p.inject[next_inject];
                w.write(c, acc.compute(c));
                ++next_inject;
                continue;
            }
            const auto c = stream.next();
            if (!c) continue; // exhausted; later injected lines still land
            w.write(*c, acc.compute(*c));
        }
        p.lines = w.lines();

        FilePairHeader hdr;
        hdr.v = v;
        hdr.generators = gens;
        hdr.cardinality = p.k;
        hdr.skew = p.skew;
        hdr.n = classes.class_count();
        hdr.seed = p.seed;
        hdr.lines = p.lines;
        hdr.class_labels = classes.class_labels();

        const fs::path dir(out_dir);
        write_file(dir / (p.base + ".txt"), fb.str());
        write_file(dir / (p.base + "_prime.txt"), fd.str());
        write_file(dir / (p.base + ".hdr"), header_text(hdr));
    }

    std::ostringstream man;
    man << "command=gen\n";
    man << "version=" << kVersion << "\n";
    man << "v=" << v << "\n";
    man << "generators=" << join(gens) << "\n";
    man << "k=" << k[0] << "," << k[1] << "," << k[2] << "," << k[3] << "\n";
    man << "lambda=" << lambda << "\n";
    man << "skew=" << (skew ? 1 : 0) << "\n";
    man << "budgets=" << budgets[0] << "," << budgets[1] << "," << budgets[2]
        << "," << budgets[3] << "\n";
    man << "seed=" << seed << "\n";
    man << "out=" << out_dir << "\n";
    man << "inject=" << (inject ? *inject : "none") << "\n";
    for (int pos = 0; pos < 4; ++pos)
        man << "block" << (pos + 1) << "=" << pairs[pair_of[pos]].base << "\n";
    for (const auto& p : pairs) {
        man << p.base << ".k=" << p.k << "\n";
        man << p.base << ".skew=" << (p.skew ? 1 : 0) << "\n";
        man << p.base << ".seed=" << p.seed << "\n";
        man << p.base << ".lines=" << p.lines << "\n";
        man << p.base << ".exhaustive=" << (p.exhaustive ? 1 : 0) << "\n";
        man << p.base << ".injected=" << p.inject.size() << "\n";
    }
    write_file(fs::path(out_dir) / "gen_manifest.txt", man.str());

    std::cout << "gen: " << pairs.size() << " file pair(s) in " << out_dir
              << "\n";
    for (const auto& p : pairs)
        std::cout << "  " << p.base << ": k=" << p.k << " skew=" << p.skew
                  << " lines=" << p.lines
                  << (p.inject.empty()
                          ? ""
                          : " injected=" + std::to_string(p.inject.size()))
                  << "\n";
    return kExitOk;
}

// ----------------------------------------------------------------- match --

struct LoadedPair {
    FilePairHeader hdr;
    std::shared_ptr<const TupleList> tuples;
};

LoadedPair load_pair(const std::string& base,
                     std::map<std::string, std::shared_ptr<const TupleList>>& cache) {
    LoadedPair out;
    std::ifstream hin(base + ".hdr");
    if (!hin) throw UsageError("cannot open " + base + ".hdr");
    out.hdr = parse_header(hin);
    if (auto it = cache.find(base); it != cache.end()) {
        out.tuples = it->second;
    } else {
        std::ifstream tin(base + "_prime.txt");
        if (!tin) throw UsageError("cannot open " + base + "_prime.txt");
        auto list = std::make_shared<TupleList>(TupleList::parse(tin, out.hdr.n));
        cache[base] = list;
        out.tuples = list;
    }
    if (out.tuples->size() != out.hdr.lines)
        throw UsageError(base + ": header announces " +
                         std::to_string(out.hdr.lines) + " lines, file has " +
                         std::to_string(out.tuples->size()));
    return out;
}

int cmd_match(const std::array<std::string, 4>& files, uint32_t lambda,
              uint64_t shards, std::optional<std::pair<uint64_t, uint64_t>> range,
              uint64_t seed, bool first, int workers, const std::string& out_dir) {
    std::map<std::string, std::shared_ptr<const TupleList>> cache;
    std::array<LoadedPair, 4> pairs;
    for (int i = 0; i < 4; ++i) pairs[i] = load_pair(files[i], cache);
    for (int i = 1; i < 4; ++i) {
        if (pairs[i].hdr.v != pairs[0].hdr.v ||
            pairs[i].hdr.n != pairs[0].hdr.n ||
            pairs[i].hdr.class_labels != pairs[0].hdr.class_labels)
            throw UsageError(files[i] + " disagrees with " + files[0] +
                             " on group or class structure");
    }
    const uint32_t n = pairs[0].hdr.n;

    MatchProblem problem = make_match_problem(
        {pairs[0].tuples, pairs[1].tuples, pairs[2].tuples, pairs[3].tuples},
        std::vector<int32_t>(n, int32_t(lambda)));

    MatchOptions opt;
    opt.shards = shards;
    if (range) {
        opt.shard_lo = range->first;
        opt.shard_hi = range->second;
    }
    opt.seed = seed;
    opt.stop_on_first = first;
    opt.workers = workers;

    const auto t0 = std::chrono::steady_clock::now();
    const MatchOutcome outcome = run_match(problem, opt);
    const double ms = elapsed_ms(t0);

    fs::create_directories(out_dir);
    std::ostringstream lines;
    for (const auto& r : outcome.results)
        lines << r.l1 << " " << r.l2 << " " << r.l3 << " " << r.l4 << "\n";
    write_file(fs::path(out_dir) / "matches.txt", lines.str());

    const uint64_t hi = std::min(opt.shard_hi, shards);
    const uint64_t lo = std::min(opt.shard_lo, hi);
    std::ostringstream man;
    man << "command=match\n";
    man << "version=" << kVersion << "\n";
    man << "files=" << files[0] << "," << files[1] << "," << files[2] << ","
        << files[3] << "\n";
    man << "v=" << pairs[0].hdr.v << "\n";
    man << "n=" << n << "\n";
    man << "lambda=" << lambda << "\n";
    man << "seed=" << seed << "\n";
    man << "shards=" << shards << "\n";
    man << "shard_lo=" << lo << "\n";
    man << "shard_hi=" << hi << "\n";
    man << "stop_on_first=" << (first ? 1 : 0) << "\n";
    man << "workers=" << workers << "\n";
    man << "mode=" << (outcome.hasher.packed ? "packed" : "wide") << "\n";
    man << "mixer=wang64\n";
    man << "offsets=" << join(outcome.hasher.offsets) << "\n";
    std::vector<std::string> coeffs;
    for (uint64_t c : outcome.hasher.coeffs) coeffs.push_back(hex64(c));
    man << "coefficients=" << join(coeffs) << "\n";
    write_file(fs::path(out_dir) / "match_manifest.txt", man.str());

    std::ostringstream rep;
    rep << "results=" << outcome.results.size() << "\n";
    rep << "a_pairs=" << outcome.counters.a_pairs << "\n";
    rep << "b_pairs=" << outcome.counters.b_pairs << "\n";
    rep << "hash_hits=" << outcome.counters.hash_hits << "\n";
    rep << "rejected=" << outcome.counters.rejected << "\n";
    rep << "max_table_entries=" << outcome.counters.max_table_entries << "\n";
    rep << "max_table_capacity=" << outcome.counters.max_table_capacity << "\n";
    rep << "shards_processed=" << outcome.counters.shards_processed << "\n";
    rep << "wide_fallback=" << (outcome.wide_fallback ? 1 : 0) << "\n";
    rep << "b_nonnegative=" << (outcome.b_nonnegative ? 1 : 0) << "\n";
    bool all_verified = true;
    for (const auto& r : outcome.results) all_verified &= r.verified;
    rep << "verified=" << (all_verified ? 1 : 0) << "\n";
    write_file(fs::path(out_dir) / "match_report.txt", rep.str());

    std::cout << "match: " << outcome.results.size() << " result(s) in " << ms
              << " ms (" << (outcome.hasher.packed ? "packed" : "wide")
              << ", shards=" << shards << ")\n";
    return outcome.results.empty() ? kExitNoMatch : kExitOk;
}

// --------------------------------------------------------------- certify --

int cmd_certify(const std::array<std::string, 4>& files,
                std::array<uint64_t, 4> line_nums,
                std::optional<uint32_t> lambda_given, const std::string& out_dir) {
    std::array<FilePairHeader, 4> hdrs;
    std::map<std::string, std::vector<std::vector<uint32_t>>> label_cache;
    SdsCertificate cert;
    for (int i = 0; i < 4; ++i) {
        std::ifstream hin(files[i] + ".hdr");
        if (!hin) throw UsageError("cannot open " + files[i] + ".hdr");
        hdrs[i] = parse_header(hin);
        if (i == 0) {
            cert.v = hdrs[0].v;
            cert.generators = hdrs[0].generators;
        } else if (hdrs[i].v != cert.v || hdrs[i].generators != cert.generators) {
            throw UsageError(files[i] + " disagrees with " + files[0] +
                             " on the group");
        }
        if (!label_cache.count(files[i])) {
            std::ifstream bin(files[i] + ".txt");
            if (!bin) throw UsageError("cannot open " + files[i] + ".txt");
            label_cache[files[i]] = read_label_lines(bin);
        }
        const auto& all = label_cache[files[i]];
        if (line_nums[i] == 0 || line_nums[i] > all.size())
            throw UsageError(files[i] + ": line " + std::to_string(line_nums[i]) +
                             " out of range (file has " +
                             std::to_string(all.size()) + " lines)");
        cert.index_sets[i] = all[line_nums[i] - 1];
        cert.params.k[i] = hdrs[i].cardinality;
    }
    cert.params.v = cert.v;
    const uint64_t ksum = uint64_t(cert.params.k[0]) + cert.params.k[1] +
                          cert.params.k[2] + cert.params.k[3];
    if (ksum <= cert.v) throw UsageError("sum(k) - v must be positive");
    cert.params.lambda = uint32_t(ksum - cert.v);
    if (lambda_given && *lambda_given != cert.params.lambda)
        throw UsageError("lambda=" + std::to_string(*lambda_given) +
                         " contradicts sum(k)-v=" +
                         std::to_string(cert.params.lambda));
    if (hdrs[0].skew) cert.skew = true;

    const auto t0 = std::chrono::steady_clock::now();
    const SdsReport rep = verify_sds(cert);

    fs::create_directories(out_dir);
    std::ostringstream report;
    report << "sds=" << rep.summary() << "\n";
    if (!rep.pass) {
        report << "hadamard=0\nskew_matrix=0\n";
        write_file(fs::path(out_dir) / "certify_report.txt", report.str());
        std::cout << rep.summary() << "\n";
        std::cout << "certify: SDS verification failed\n";
        return kExitVerifyFail;
    }

    const SignMatrix h = assemble_goethals_seidel(
        cert.v, std::span<const std::vector<uint32_t>>(rep.blocks.data(), 4));
    const bool hadamard_ok = verify_hadamard(h);
    const bool skew_matrix = rep.skew_block && verify_skew_hadamard(h);
    report << "order=" << h.order() << "\n";
    report << "hadamard=" << (hadamard_ok ? 1 : 0) << "\n";
    report << "skew_matrix=" << (skew_matrix ? 1 : 0) << "\n";
    write_file(fs::path(out_dir) / "certify_report.txt", report.str());

    if (!hadamard_ok || (rep.skew_block.has_value() && !skew_matrix)) {
        std::cout << "certify: matrix verification failed\n";
        return kExitVerifyFail;
    }

    cert.skew = rep.skew_block.has_value();
    std::ostringstream cert_text;
    write_certificate(cert_text, cert);
    write_file(fs::path(out_dir) / "certificate.txt", cert_text.str());

    std::ostringstream mat_text;
    write_matrix_text(mat_text, h);
    write_file(fs::path(out_dir) / "matrix.txt", mat_text.str());
    std::ostringstream mat_bin;
    write_matrix_packed(mat_bin, h);
    write_file(fs::path(out_dir) / "matrix.bin", mat_bin.str());

    std::cout << rep.summary() << "\n";
    std::cout << "certify: order " << h.order() << " "
              << (skew_matrix ? "skew-Hadamard" : "Hadamard")
              << " matrix verified in " << elapsed_ms(t0) << " ms -> "
              << (fs::path(out_dir) / "matrix.txt").string() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- verify --

int verify_certificate(const std::string& path) {
    const SdsCertificate cert = read_certificate_file(path);
    const SdsReport rep = verify_sds(cert);
    std::cout << rep.summary() << "\n";
    if (!rep.pass) return kExitVerifyFail;
    const SignMatrix h = assemble_goethals_seidel(
        cert.v, std::span<const std::vector<uint32_t>>(rep.blocks.data(), 4));
    const bool hadamard_ok = verify_hadamard(h);
    const bool skew_matrix = rep.skew_block && verify_skew_hadamard(h);
    std::cout << "order=" << h.order() << " hadamard=" << (hadamard_ok ? 1 : 0)
              << " skew_matrix=" << (skew_matrix ? 1 : 0) << "\n";
    if (!hadamard_ok || (rep.skew_block.has_value() && !skew_matrix))
        return kExitVerifyFail;
    return kExitOk;
}

int verify_matrix(const SignMatrix& m) {
    const bool hadamard_ok = verify_hadamard(m);
    const bool skew = hadamard_ok && verify_skew_hadamard(m);
    std::cout << "order=" << m.order() << " hadamard=" << (hadamard_ok ? 1 : 0)
              << " skew=" << (skew ? 1 : 0) << "\n";
    return hadamard_ok ? kExitOk : kExitVerifyFail;
}

int cmd_verify(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw UsageError("cannot open " + path);
    char magic[8] = {};
    probe.read(magic, 8);
    if (probe.gcount() == 8 && std::equal(magic, magic + 8, kMatrixMagic)) {
        std::ifstream in(path, std::ios::binary);
        return verify_matrix(read_matrix_packed(in));
    }
    probe.close();

    std::ifstream text(path);
    std::string line;
    while (std::getline(text, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        if (line.find('=') != std::string::npos) return verify_certificate(path);
        if (line.find_first_not_of("+-") == std::string::npos) {
            std::ifstream in(path);
            return verify_matrix(read_matrix_text(in));
        }
        break;
    }
    throw UsageError(path + ": not a certificate or matrix file");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"supplementary difference set search and Hadamard assembly"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> set_overrides;
    app.add_option("--config", config_path, "plain key=value configuration file");
    app.add_option("--set", set_overrides, "override one config key (key=value)");

    auto* sub_params = app.add_subcommand("params", "enumerate parameter sets");
    std::string pa_v, pa_gens;
    auto* pa_v_opt = sub_params->add_option("v", pa_v, "group order (odd)");
    auto* pa_gens_opt = sub_params->add_option(
        "--generators", pa_gens, "annotate with orbit feasibility for this subgroup");

    auto* sub_orbits = app.add_subcommand("orbits", "print orbit and class tables");
    std::string or_v, or_gens, or_out;
    auto* or_v_opt = sub_orbits->add_option("v", or_v, "group order");
    auto* or_gens_opt =
        sub_orbits->add_option("--generators", or_gens, "subgroup generators");
    auto* or_out_opt =
        sub_orbits->add_option("--out", or_out, "also write the tables here");

    auto* sub_gen = app.add_subcommand("gen", "generate candidate file pairs");
    std::string ge_v, ge_gens, ge_k, ge_lambda, ge_skew, ge_budget, ge_budgets,
        ge_seed, ge_out, ge_inject;
    auto* ge_v_opt = sub_gen->add_option("--v", ge_v, "group order");
    auto* ge_gens_opt =
        sub_gen->add_option("--generators", ge_gens, "subgroup generators");
    auto* ge_k_opt = sub_gen->add_option("--k", ge_k, "block sizes k1,k2,k3,k4");
    auto* ge_lambda_opt =
        sub_gen->add_option("--lambda", ge_lambda, "expected lambda (checked)");
    auto* ge_skew_opt =
        sub_gen->add_option("--skew", ge_skew, "restrict block 1 to skew unions");
    auto* ge_budget_opt =
        sub_gen->add_option("--budget", ge_budget, "candidates per block");
    auto* ge_budgets_opt =
        sub_gen->add_option("--budgets", ge_budgets, "per-block budgets b1,..,b4");
    auto* ge_seed_opt = sub_gen->add_option("--seed", ge_seed, "sampling seed");
    auto* ge_out_opt = sub_gen->add_option("--out", ge_out, "output directory");
    auto* ge_inject_opt = sub_gen->add_option(
        "--inject", ge_inject, "certificate whose blocks are planted in the files");

    auto* sub_match = app.add_subcommand("match", "search for quadruple matches");
    std::string ma_files, ma_lambda, ma_shards, ma_range, ma_seed, ma_workers,
        ma_out;
    bool ma_first = false;
    auto* ma_files_opt = sub_match->add_option(
        "--files", ma_files, "four file-pair bases base1,..,base4");
    auto* ma_lambda_opt =
        sub_match->add_option("--lambda", ma_lambda, "target lambda");
    auto* ma_shards_opt = sub_match->add_option("--shards", ma_shards,
                                                "shard modulus M (power of two)");
    auto* ma_range_opt =
        sub_match->add_option("--shard-range", ma_range, "process shards lo..hi");
    auto* ma_seed_opt = sub_match->add_option("--seed", ma_seed, "hash seed");
    auto* ma_workers_opt =
        sub_match->add_option("--workers", ma_workers, "worker count (0 = all)");
    auto* ma_first_opt =
        sub_match->add_flag("--first", ma_first, "stop after the first match");
    auto* ma_out_opt = sub_match->add_option("--out", ma_out, "output directory");

    auto* sub_certify =
        app.add_subcommand("certify", "build and verify a certificate from a match");
    std::string ce_files, ce_lines, ce_matches, ce_index, ce_lambda, ce_out;
    auto* ce_files_opt = sub_certify->add_option(
        "--files", ce_files, "four file-pair bases base1,..,base4");
    auto* ce_lines_opt = sub_certify->add_option(
        "--lines", ce_lines, "matched line numbers l1,l2,l3,l4 (1-based)");
    auto* ce_matches_opt = sub_certify->add_option(
        "--matches", ce_matches, "matches.txt to take the line numbers from");
    auto* ce_index_opt = sub_certify->add_option(
        "--index", ce_index, "1-based row of the matches file (default 1)");
    auto* ce_lambda_opt =
        sub_certify->add_option("--lambda", ce_lambda, "expected lambda (checked)");
    auto* ce_out_opt = sub_certify->add_option("--out", ce_out, "output directory");

    auto* sub_verify =
        app.add_subcommand("verify", "verify a certificate or matrix file");
    std::string ve_input;
    auto* ve_input_opt =
        sub_verify->add_option("input", ve_input, "certificate or matrix path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        const Settings s(load_config(config_path, set_overrides));

        if (app.got_subcommand(sub_params)) {
            const uint32_t v = parse_u32(s.get(pa_v_opt, pa_v, "v"), "v");
            std::optional<std::vector<uint32_t>> gens;
            if (s.provided(pa_gens_opt, "generators"))
                gens = parse_u32_list(s.get(pa_gens_opt, pa_gens, "generators"),
                                      "generators");
            return cmd_params(v, gens);
        }

        if (app.got_subcommand(sub_orbits)) {
            const uint32_t v = parse_u32(s.get(or_v_opt, or_v, "v"), "v");
            const auto gens = parse_u32_list(
                s.get(or_gens_opt, or_gens, "generators", std::string("")),
                "generators");
            return cmd_orbits(v, gens,
                              s.get(or_out_opt, or_out, "out", std::string("")));
        }

        if (app.got_subcommand(sub_gen)) {
            const uint32_t v = parse_u32(s.get(ge_v_opt, ge_v, "v"), "v");
            const auto gens = parse_u32_list(
                s.get(ge_gens_opt, ge_gens, "generators", std::string("")),
                "generators");
            const auto ks = parse_u32_list(s.get(ge_k_opt, ge_k, "k"), "k");
            if (ks.size() != 4) throw UsageError("k: expected four block sizes");
            std::optional<uint32_t> lambda;
            if (s.provided(ge_lambda_opt, "lambda"))
                lambda =
                    parse_u32(s.get(ge_lambda_opt, ge_lambda, "lambda"), "lambda");
            const bool skew = parse_bool(
                s.get(ge_skew_opt, ge_skew, "skew", std::string("0")), "skew");
            std::array<uint64_t, 4> budgets{};
            if (s.provided(ge_budgets_opt, "budgets")) {
                const auto bs = parse_u64_list(
                    s.get(ge_budgets_opt, ge_budgets, "budgets"), "budgets");
                if (bs.size() != 4)
                    throw UsageError("budgets: expected four values");
                std::copy(bs.begin(), bs.end(), budgets.begin());
            } else {
                budgets.fill(parse_u64(
                    s.get(ge_budget_opt, ge_budget, "budget"), "budget"));
            }
            const uint64_t seed = parse_u64(
                s.get(ge_seed_opt, ge_seed, "seed", std::string("0")), "seed");
            const std::string out =
                s.get(ge_out_opt, ge_out, "out", std::string("."));
            std::optional<std::string> inject;
            if (s.provided(ge_inject_opt, "inject"))
                inject = s.get(ge_inject_opt, ge_inject, "inject");
            return cmd_gen(v, gens, {ks[0], ks[1], ks[2], ks[3]}, lambda, skew,
                           budgets, seed, out, inject);
        }

        if (app.got_subcommand(sub_match)) {
            const auto bases = split(s.get(ma_files_opt, ma_files, "files"), ',');
            if (bases.size() != 4)
                throw UsageError("files: expected four file-pair bases");
            const uint32_t lambda =
                parse_u32(s.get(ma_lambda_opt, ma_lambda, "lambda"), "lambda");
            const uint64_t shards = parse_u64(
                s.get(ma_shards_opt, ma_shards, "shards", std::string("1")),
                "shards");
            std::optional<std::pair<uint64_t, uint64_t>> range;
            if (s.provided(ma_range_opt, "shard_range"))
                range = parse_range(s.get(ma_range_opt, ma_range, "shard_range"));
            const uint64_t seed = parse_u64(
                s.get(ma_seed_opt, ma_seed, "seed", std::string("0")), "seed");
            const bool first =
                ma_first_opt->count() > 0
                    ? ma_first
                    : parse_bool(s.get(nullptr, "", "first", std::string("0")),
                                 "first");
            const int workers = resolve_workers(ma_workers_opt, ma_workers, s);
            const std::string out =
                s.get(ma_out_opt, ma_out, "out", std::string("."));
            return cmd_match({bases[0], bases[1], bases[2], bases[3]}, lambda,
                             shards, range, seed, first, workers, out);
        }

        if (app.got_subcommand(sub_certify)) {
            const auto bases = split(s.get(ce_files_opt, ce_files, "files"), ',');
            if (bases.size() != 4)
                throw UsageError("files: expected four file-pair bases");
            std::array<uint64_t, 4> lines{};
            if (s.provided(ce_lines_opt, "lines")) {
                const auto ls = parse_u64_list(
                    s.get(ce_lines_opt, ce_lines, "lines"), "lines");
                if (ls.size() != 4)
                    throw UsageError("lines: expected four line numbers");
                std::copy(ls.begin(), ls.end(), lines.begin());
            } else {
                const std::string mpath =
                    s.get(ce_matches_opt, ce_matches, "matches");
                const uint64_t index = parse_u64(
                    s.get(ce_index_opt, ce_index, "index", std::string("1")),
                    "index");
                std::ifstream min(mpath);
                if (!min) throw UsageError("cannot open " + mpath);
                std::string line;
                uint64_t row = 0;
                bool found = false;
                while (std::getline(min, line)) {
                    if (trim(line).empty()) continue;
                    if (++row == index) {
                        std::istringstream ls(line);
                        if (!(ls >> lines[0] >> lines[1] >> lines[2] >> lines[3]))
                            throw UsageError(mpath + ": malformed row " + line);
                        found = true;
                        break;
                    }
                }
                if (!found)
                    throw UsageError(mpath + ": no row " + std::to_string(index));
            }
            std::optional<uint32_t> lambda;
            if (s.provided(ce_lambda_opt, "lambda"))
                lambda =
                    parse_u32(s.get(ce_lambda_opt, ce_lambda, "lambda"), "lambda");
            const std::string out =
                s.get(ce_out_opt, ce_out, "out", std::string("."));
            return cmd_certify({bases[0], bases[1], bases[2], bases[3]}, lines,
                               lambda, out);
        }

        if (app.got_subcommand(sub_verify))
            return cmd_verify(s.get(ve_input_opt, ve_input, "input"));

        throw UsageError("no subcommand given");
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}
