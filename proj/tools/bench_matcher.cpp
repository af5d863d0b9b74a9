#include <CLI11.hpp>

#include <bit>
#include <chrono>
#include <cmath>
#include <iostream>
#include <memory>
#include <random>
#include <thread>
#include <vector>

#include "sdsforge/hadamard.hpp"
#include "sdsforge/matcher.hpp"
#include "sdsforge/rng.hpp"

using namespace sdsforge;

namespace {

double run_ms(const MatchProblem& p, const MatchOptions& opt) {
    const auto t0 = std::chrono::steady_clock::now();
    const MatchOutcome out = run_match(p, opt);
    const double ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
    if (out.results.empty()) std::cout << "  (no matches)";
    return ms;
}

MatchProblem synthetic(uint64_t rows, uint32_t width, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::array<std::shared_ptr<TupleList>, 4> lists;
    std::vector<int32_t> row(width);
    for (int i = 0; i < 4; ++i) {
        lists[i] = std::make_shared<TupleList>(width);
        for (uint64_t r = 0; r < rows; ++r) {
            for (auto& x : row) x = int32_t(uniform_below(rng, 16));
            lists[i]->push(row);
        }
    }
    std::vector<int32_t> target(width);
    for (uint32_t c = 0; c < width; ++c) {
        target[c] = 0;
        for (int i = 0; i < 4; ++i) target[c] += lists[i]->row(rows / 2)[c];
    }
    return make_match_problem({lists[0], lists[1], lists[2], lists[3]},
                              std::move(target));
}

SignMatrix sylvester(uint32_t order) {
    SignMatrix h(order);
    for (uint32_t r = 0; r < order; ++r)
        for (uint32_t c = 0; c < order; ++c)
            h.set(r, c, std::popcount(r & c) % 2 ? int8_t{-1} : int8_t{1});
    return h;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"matcher and verifier benchmarks"};
    uint64_t pairs = 1'000'000;
    uint32_t width = 16;
    uint64_t shards = 64;
    uint64_t seed = 1;
    unsigned max_workers = std::thread::hardware_concurrency();
    uint32_t verify_order = 1024;
    app.add_option("--pairs", pairs, "hash-table pairs per side (rows^2)");
    app.add_option("--width", width, "tuple width");
    app.add_option("--shards", shards, "shard modulus M");
    app.add_option("--seed", seed, "rng seed");
    app.add_option("--max-workers", max_workers, "highest worker count to try");
    app.add_option("--verify-order", verify_order,
                   "order of the Hadamard verification benchmark (0 = skip)");
    CLI11_PARSE(app, argc, argv);

    const uint64_t rows = uint64_t(std::llround(std::sqrt(double(pairs))));
    std::cout << "match workload: 4 lists x " << rows << " rows, width " << width
              << ", " << rows * rows << " pairs per side, shards=" << shards
              << "\n";
    const MatchProblem p = synthetic(rows, width, seed);

    MatchOptions opt;
    opt.shards = shards;
    opt.seed = seed;
    if (max_workers == 0) max_workers = 1;
    double base = 0;
    for (unsigned w = 1; w <= max_workers; w *= 2) {
        opt.workers = int(w);
        const double ms = run_ms(p, opt);
        if (w == 1) base = ms;
        std::cout << "  workers=" << w << "  " << ms << " ms  speedup="
                  << (ms > 0 ? base / ms : 0.0) << "\n";
    }

    if (verify_order > 0) {
        const SignMatrix h = sylvester(verify_order);
        auto t0 = std::chrono::steady_clock::now();
        const bool ok_packed = verify_hadamard(h);
        const double packed_ms = std::chrono::duration<double, std::milli>(
                                     std::chrono::steady_clock::now() - t0)
                                     .count();
        t0 = std::chrono::steady_clock::now();
        const bool ok_ref = verify_hadamard_reference(h);
        const double ref_ms = std::chrono::duration<double, std::milli>(
                                  std::chrono::steady_clock::now() - t0)
                                  .count();
        std::cout << "verify order " << verify_order << ": packed "
                  << packed_ms << " ms, reference " << ref_ms << " ms, agree="
                  << (ok_packed == ok_ref ? 1 : 0) << "\n";
    }
    return 0;
}
