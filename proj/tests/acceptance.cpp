// Acceptance gate. Prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails.
//
//   acceptance --cli path/to/vizrec [--data-dir dir]

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include <unistd.h>

#include <CLI11.hpp>

#include "oracle_graph.hpp"
#include "vizrec/vizrec.hpp"

using namespace vizrec;

namespace {

// Pinned budgets and sample sizes.
constexpr double kGraphBudgetSec = 1.0;
constexpr double kShortestPathBudgetSec = 10.0;
constexpr double kBenchmarkBudgetSec = 120.0;
constexpr std::size_t kSoundnessQueries = 10000;
constexpr std::size_t kDistancePairs = 10000;
constexpr std::size_t kScalingSets = 1000;
constexpr std::size_t kLambdaZeroSets = 1000;
constexpr std::size_t kRoundTripSessions = 50;
constexpr std::size_t kMaxSetSize = 200; // random subset of a node's candidates
constexpr std::size_t kContainmentTrials = 20;
const std::string kBenchDataset = "birdstrikes";

using Stopwatch = std::chrono::steady_clock;

double seconds_since(Stopwatch::time_point t0) { return std::chrono::duration<double>(Stopwatch::now() - t0).count(); }

struct Outcome {
    bool pass = true;
    std::string detail;

    void fail(const std::string& why) {
        if (pass) detail = why;
        pass = false;
    }
};

std::vector<Field> synthetic_fields(std::size_t n) {
    std::vector<Field> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back({"f" + std::to_string(i), static_cast<FieldType>(i % 3)});
    return out;
}

std::string fmt(double v, int precision = 2) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(precision);
    s << v;
    return s.str();
}

// ---------------------------------------------------------------------------

Outcome graph_combinatorics() {
    Outcome o;
    auto t0 = Stopwatch::now();
    struct Case {
        std::size_t fields, cap, expected;
    };
    for (auto c : {Case{15, 3, 575}, Case{14, 3, 469}}) {
        DesignGraph g(synthetic_fields(c.fields), c.cap);
        if (g.node_count() != c.expected || g.nodes().size() != c.expected)
            o.fail(std::to_string(c.fields) + " fields: " + std::to_string(g.node_count()) + " nodes, expected " +
                   std::to_string(c.expected));
    }
    double sec = seconds_since(t0);
    if (sec >= kGraphBudgetSec) o.fail("took " + fmt(sec, 3) + " s");
    if (o.pass) o.detail = "575 and 469 nodes in " + fmt(sec * 1000, 1) + " ms";
    return o;
}

Outcome shortest_path_equivalence() {
    Outcome o;
    auto t0 = Stopwatch::now();
    std::size_t pairs = 0;
    for (int n = 1; n <= 5; ++n) {
        for (int m = 1; m <= n; ++m) {
            DesignGraph g(synthetic_fields(static_cast<std::size_t>(n)), static_cast<std::size_t>(m));
            auto nodes = oracle::all_nodes(n, m);
            for (const auto& a : nodes) {
                auto dist = oracle::bfs(a, n, m);
                NodeId na;
                for (int i : a) na = na.with(static_cast<std::size_t>(i));
                for (const auto& b : nodes) {
                    NodeId nb;
                    for (int i : b) nb = nb.with(static_cast<std::size_t>(i));
                    auto got = g.shortest_path_len(na, nb);
                    auto it = dist.find(b);
                    bool ok = it == dist.end() ? !got : (got && *got == static_cast<std::size_t>(it->second));
                    ++pairs;
                    if (!ok) o.fail("mismatch on n=" + std::to_string(n) + ", cap=" + std::to_string(m));
                }
            }
        }
    }
    double sec = seconds_since(t0);
    if (sec >= kShortestPathBudgetSec) o.fail("took " + fmt(sec, 3) + " s");
    if (o.pass) o.detail = std::to_string(pairs) + " node pairs in " + fmt(sec, 3) + " s";
    return o;
}

Outcome constraint_soundness(const Catalog& catalog) {
    Outcome o;
    std::mt19937_64 rng(2024);
    auto pick = [&rng](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
    auto datasets = catalog.names();
    const auto& presets = preset_names();
    std::size_t items = 0;
    for (std::size_t q = 0; q < kSoundnessQueries && o.pass; ++q) {
        auto engine = catalog.engine(datasets[pick(datasets.size())]);
        const auto& ds = engine->dataset();
        auto cfg = preset(presets[pick(presets.size())]);
        auto g = engine->graph(cfg);

        std::set<std::string> sel;
        std::size_t k = pick(cfg.attr_limit() + 1);
        while (sel.size() < k) sel.insert(ds.fields()[pick(ds.field_count())].name);
        auto anchor = engine->specified_view(sel, cfg);
        if (anchor && pick(2) == 0) {
            // re-anchor on a chart the anchor's own query surfaced
            auto first = engine->related_views(anchor, cfg, 0);
            if (!first.items.empty()) anchor = first.items[pick(first.items.size())].spec;
        }
        auto head = engine->related_views(anchor, cfg, 0);
        std::size_t pages = std::max<std::size_t>(1, (head.total + cfg.page_size - 1) / cfg.page_size);
        auto page = engine->related_views(anchor, cfg, pick(pages));

        std::optional<NodeId> n0;
        if (anchor) n0 = g.node(variable_set(*anchor));
        for (const auto& item : page.items) {
            ++items;
            auto vars = variable_set(item.spec);
            std::string where = cfg.name + " on " + ds.name() + ": " + canonical_key(item.spec);
            if (!cfg.encoding_config.admits(item.spec)) o.fail("config violated by " + where);
            if (!is_valid(item.spec, ds)) o.fail("invalid spec " + where);
            if (vars.empty() || vars.size() > kMaxSpecAttributes || vars.size() > cfg.attr_limit())
                o.fail("attribute cap violated by " + where);
            if (g.node(vars) != item.node) o.fail("node mismatch for " + where);
            if (n0) {
                if (!g.within_constraints(item.node, *n0, cfg.max_path(), cfg.max_inputs))
                    o.fail("outside constraints: " + where);
                if (cfg.traversal.kind == TraversalStrategy::Kind::Dfs && !n0->is_subset_of(item.node))
                    o.fail("DFS result is not a descendant: " + where);
            } else if (vars.size() != 1) {
                o.fail("non-univariate gallery chart: " + where);
            }
        }
    }
    if (o.pass) o.detail = std::to_string(kSoundnessQueries) + " queries, " + std::to_string(items) + " specs checked";
    return o;
}

Outcome oracle_properties(const Catalog& catalog) {
    Outcome o;
    std::mt19937_64 rng(77);
    auto pick = [&rng](std::size_t n) { return static_cast<std::size_t>(rng() % n); };

    struct Pool {
        std::shared_ptr<const Recommender> engine;
        std::vector<std::vector<VisSpec>> sets; // candidates per sampled node
    };
    std::vector<Pool> pools;
    for (const auto& name : catalog.names()) {
        Pool p{catalog.engine(name), {}};
        auto g = build_graph(p.engine->dataset());
        auto nodes = g.nodes();
        for (int i = 0; i < 150; ++i) {
            try {
                auto set = enumerate_candidates(g, nodes[pick(nodes.size())], p.engine->dataset(), full_encoding_config());
                std::shuffle(set.begin(), set.end(), rng);
                if (set.size() > kMaxSetSize) set.resize(kMaxSetSize);
                p.sets.push_back(std::move(set));
            } catch (const NoValidSpec&) {
            }
        }
        pools.push_back(std::move(p));
    }

    // distance: identity, symmetry, non-negativity
    for (std::size_t i = 0; i < kDistancePairs; ++i) {
        const auto& p = pools[pick(pools.size())];
        const auto& s1 = p.sets[pick(p.sets.size())];
        const auto& s2 = p.sets[pick(p.sets.size())];
        const auto& a = s1[pick(s1.size())];
        const auto& b = s2[pick(s2.size())];
        double ab = perceptual_distance(a, b), ba = perceptual_distance(b, a);
        if (ab < 0) o.fail("negative distance");
        if (ab != ba) o.fail("asymmetric distance " + canonical_key(a) + " / " + canonical_key(b));
        if (perceptual_distance(a, a) != 0) o.fail("non-zero self distance");
        if ((ab == 0) != same_design(a, b)) o.fail("zero distance between distinct designs");
    }

    auto same_order = [](const std::vector<RankedSpec>& x, const std::vector<RankedSpec>& y) {
        if (x.size() != y.size()) return false;
        for (std::size_t i = 0; i < x.size(); ++i)
            if (x[i].key != y[i].key) return false;
        return true;
    };

    // positive scaling of the weight table
    std::uniform_real_distribution<double> factor(0.01, 100.0);
    for (std::size_t i = 0; i < kScalingSets; ++i) {
        const auto& p = pools[pick(pools.size())];
        const auto& set = p.sets[pick(p.sets.size())];
        const auto& ds = p.engine->dataset();
        auto anchor = set[pick(set.size())];
        auto scaled = OracleTables::defaults().scaled(factor(rng));
        for (auto oracle : {OracleKind::effectiveness(), OracleKind::dziban(1.0)}) {
            auto base = rank(set, oracle, anchor, ds);
            auto other = rank(set, oracle, anchor, ds, scaled);
            if (!same_order(base, other)) o.fail("ranking changed under scaling for " + canonical_key(anchor));
        }
    }

    // lambda = 0 reduces to effectiveness
    for (std::size_t i = 0; i < kLambdaZeroSets; ++i) {
        const auto& p = pools[pick(pools.size())];
        const auto& set = p.sets[pick(p.sets.size())];
        const auto& ds = p.engine->dataset();
        auto anchor = set[pick(set.size())];
        if (!same_order(rank(set, OracleKind::dziban(0.0), anchor, ds), rank(set, OracleKind::effectiveness(), std::nullopt, ds)))
            o.fail("dziban(0) ranking differs from effectiveness");
    }
    if (o.pass)
        o.detail = std::to_string(kDistancePairs) + " distance pairs, " + std::to_string(kScalingSets) + " scaled sets, " +
                   std::to_string(kLambdaZeroSets) + " lambda=0 sets";
    return o;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Outcome cli_determinism(const std::string& cli, const std::string& data_dir) {
    Outcome o;
    auto dir = std::filesystem::temp_directory_path() / ("vizrec-acceptance-" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    std::vector<std::string> outputs;
    for (int run = 0; run < 2; ++run) {
        auto out = dir / ("run" + std::to_string(run) + ".csv");
        std::string cmd = "\"" + cli + "\" --data-dir \"" + data_dir + "\" bench --dataset " + kBenchDataset +
                          " --algorithms compassql-bfs,compassql-dfs,dziban-bfs,dziban-dfs --trials 100 --steps 30 --out \"" +
                          out.string() + "\" > /dev/null";
        if (std::system(cmd.c_str()) != 0) {
            o.fail("command failed: " + cmd);
            break;
        }
        outputs.push_back(read_file(out));
    }
    std::filesystem::remove_all(dir);
    if (o.pass) {
        if (outputs[0].empty()) o.fail("empty CSV");
        else if (outputs[0] != outputs[1]) o.fail("CSV bytes differ between runs");
        else o.detail = "2 runs, " + std::to_string(outputs[0].size()) + " identical bytes";
    }
    return o;
}

Outcome log_round_trip(std::shared_ptr<const Catalog> catalog) {
    Outcome o;
    std::mt19937_64 rng(5150);
    auto pick = [&rng](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
    auto datasets = catalog->names();
    const auto& presets = preset_names();
    for (std::size_t i = 0; i < kRoundTripSessions; ++i) {
        AgentPolicy policy;
        switch (pick(3)) {
        case 0: policy = default_benchmark_policy(); break;
        case 1: policy = AgentPolicy::breadth_seeker(); break;
        default: policy = AgentPolicy::depth_seeker(); break;
        }
        policy.steps = 1 + pick(40);
        policy.seed = rng();
        auto dataset = datasets[pick(datasets.size())];
        auto algorithm = presets[pick(presets.size())];
        auto run = run_agent(policy, algorithm, dataset, catalog);
        auto live = compute_metrics(run.log);
        auto exported = compute_metrics(run.ndjson);
        if (!(live == exported)) o.fail("metrics differ for " + algorithm + " on " + dataset);

        SessionService svc(catalog);
        auto id = svc.replay(dataset, algorithm, parse_ndjson(run.ndjson));
        if (!(compute_metrics(svc.log(id)) == live)) o.fail("replayed session differs for " + algorithm + " on " + dataset);
    }
    if (o.pass) o.detail = std::to_string(kRoundTripSessions) + " sessions, exported and replayed metrics identical";
    return o;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"vizrec acceptance checks"};
    std::string cli, data_dir = VIZREC_DATA_DIR;
    app.add_option("--cli", cli, "Path to the vizrec executable")->required();
    app.add_option("--data-dir", data_dir, "Dataset directory");
    CLI11_PARSE(app, argc, argv);

    std::shared_ptr<const Catalog> catalog = load_catalog(data_dir);
    int failures = 0;
    auto report = [&failures](const std::string& name, const Outcome& o) {
        std::cout << (o.pass ? "PASS  " : "FAIL  ") << name << "  " << o.detail << std::endl;
        failures += !o.pass;
    };
    auto guarded = [](const std::function<Outcome()>& f) {
        auto t0 = Stopwatch::now();
        try {
            auto o = f();
            std::cerr << "  (" << fmt(seconds_since(t0), 1) << " s)" << std::endl;
            return o;
        } catch (const std::exception& e) {
            Outcome o;
            o.fail(std::string("exception: ") + e.what());
            return o;
        }
    };

    report("graph-combinatorics", guarded(graph_combinatorics));
    report("shortest-path-oracle", guarded(shortest_path_equivalence));
    report("constraint-soundness", guarded([&] { return constraint_soundness(*catalog); }));
    report("oracle-properties", guarded([&] { return oracle_properties(*catalog); }));
    report("bench-determinism", guarded([&] { return cli_determinism(cli, data_dir); }));

    // Default benchmark on the birdstrikes-sized dataset, shared by the
    // directional checks.
    std::optional<MetricsReport> bench;
    double bench_sec = 0;
    std::string bench_error;
    try {
        auto t0 = Stopwatch::now();
        bench = compare({"compassql-bfs", "compassql-dfs", "dziban-bfs", "dziban-dfs"}, kBenchDataset,
                        kDefaultBenchmarkTrials, default_benchmark_policy(), catalog);
        bench_sec = seconds_since(t0);
    } catch (const std::exception& e) {
        bench_error = e.what();
    }

    report("bfs-exposes-more-variable-sets", guarded([&] {
               Outcome o;
               if (!bench) return o.fail("benchmark failed: " + bench_error), o;
               double cb = bench->summary("compassql-bfs").exposed_var_sets.mean;
               double cd = bench->summary("compassql-dfs").exposed_var_sets.mean;
               double db = bench->summary("dziban-bfs").exposed_var_sets.mean;
               double dd = bench->summary("dziban-dfs").exposed_var_sets.mean;
               std::string means = "compassql bfs " + fmt(cb) + " vs dfs " + fmt(cd) + "; dziban bfs " + fmt(db) +
                                   " vs dfs " + fmt(dd) + "; " + fmt(bench_sec, 1) + " s";
               if (!(cb > cd)) o.fail("compassql: " + means);
               if (!(db > dd)) o.fail("dziban: " + means);
               if (bench_sec >= kBenchmarkBudgetSec) o.fail("took " + fmt(bench_sec, 1) + " s");
               if (o.pass) o.detail = means;
               return o;
           }));

    report("dziban-exposes-more-designs", guarded([&] {
               Outcome o;
               if (!bench) return o.fail("benchmark failed: " + bench_error), o;
               double d = bench->summary("dziban-bfs").exposed_designs.mean;
               double c = bench->summary("compassql-bfs").exposed_designs.mean;
               std::string means = "dziban-bfs " + fmt(d) + " vs compassql-bfs " + fmt(c);
               if (!(d > c)) o.fail(means);
               else o.detail = means;
               return o;
           }));

    report("metrics-containment", guarded([&] {
               Outcome o;
               if (!bench) return o.fail("benchmark failed: " + bench_error), o;
               std::vector<MetricsRow> rows = bench->rows;
               for (const auto& name : catalog->names()) {
                   auto extra = compare(preset_names(), name, kContainmentTrials, default_benchmark_policy(), catalog);
                   rows.insert(rows.end(), extra.rows.begin(), extra.rows.end());
               }
               for (const auto& r : rows) {
                   std::string where = r.algorithm + "/" + r.dataset + "/" + std::to_string(r.trial);
                   if (r.interacted_var_sets > r.exposed_var_sets) o.fail("variable sets at " + where);
                   if (r.interacted_designs > r.exposed_designs) o.fail("designs at " + where);
                   if (r.exposed_designs < r.exposed_var_sets) o.fail("designs below variable sets at " + where);
               }
               if (o.pass) o.detail = std::to_string(rows.size()) + " trials";
               return o;
           }));

    report("log-round-trip", guarded([&] { return log_round_trip(catalog); }));

    std::cout << (failures ? std::to_string(failures) + " criteria failed" : std::string("all criteria passed")) << std::endl;
    return failures ? 1 : 0;
}
