#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "vizrec/session.hpp"

namespace vizrec {

// Scripted stand-in for a human analyst.
struct AgentPolicy {
    enum class Kind { RandomWalker, BreadthSeeker, DepthSeeker };
    Kind kind = Kind::RandomWalker;
    double promote_prob = 0.5;
    double bookmark_prob = 0.2;
    double hover_prob = 0.3;
    std::size_t steps = 30;
    std::uint64_t seed = 0;

    static AgentPolicy random_walker(double promote, double bookmark, double hover, std::size_t steps = 30) {
        return {Kind::RandomWalker, promote, bookmark, hover, steps};
    }
    static AgentPolicy breadth_seeker(std::size_t steps = 30) { return {Kind::BreadthSeeker, 0, 0, 0, steps}; }
    static AgentPolicy depth_seeker(std::size_t steps = 30) { return {Kind::DepthSeeker, 0, 0, 0, steps}; }

    void validate() const {
        for (double p : {promote_prob, bookmark_prob, hover_prob})
            if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("agent probabilities must lie in [0, 1]");
        if (promote_prob + bookmark_prob + hover_prob > 1.0 + 1e-12)
            throw InvalidArgument("agent probabilities must sum to at most 1");
        if (steps < 1) throw InvalidArgument("agent steps must be >= 1");
    }
};

inline const char* to_string(AgentPolicy::Kind k) {
    switch (k) {
    case AgentPolicy::Kind::RandomWalker: return "random";
    case AgentPolicy::Kind::BreadthSeeker: return "breadth";
    case AgentPolicy::Kind::DepthSeeker: return "depth";
    }
    return "?";
}

// Defaults of the standard benchmark.
inline AgentPolicy default_benchmark_policy() { return AgentPolicy::random_walker(0.5, 0.2, 0.3, 30); }
inline constexpr std::size_t kDefaultBenchmarkTrials = 100;

inline constexpr std::int64_t kAgentStepMs = 1000;
inline constexpr std::int64_t kAgentMinHoverMs = 100;
inline constexpr std::int64_t kAgentMaxHoverMs = 1500;

struct AgentRun {
    std::string session;
    InteractionLog log;
    std::string ndjson;
};

namespace detail {

class AgentDriver {
public:
    AgentDriver(SessionService& svc, std::string session, const AgentPolicy& policy, std::int64_t& clock)
        : svc_(svc), id_(std::move(session)), policy_(policy), rng_(policy.seed), clock_(clock) {}

    void step() {
        clock_ += kAgentStepMs;
        auto v = svc_.views(id_);
        switch (policy_.kind) {
        case AgentPolicy::Kind::RandomWalker: random_step(v); break;
        case AgentPolicy::Kind::BreadthSeeker: breadth_step(v); break;
        case AgentPolicy::Kind::DepthSeeker: depth_step(v); break;
        }
    }

private:
    double uniform01() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform_below(rng_, n)); }

    void promote(const VisSpec& spec) {
        svc_.promote(id_, spec);
        specified_sets_.insert(variable_set(spec));
    }

    void random_step(const Views& v) {
        std::vector<const VisSpec*> visible;
        if (v.specified) visible.push_back(&*v.specified);
        for (const auto& item : v.related) visible.push_back(&item.spec);
        double u = uniform01();
        const double p1 = policy_.promote_prob, p2 = p1 + policy_.bookmark_prob, p3 = p2 + policy_.hover_prob;
        if (u < p1) {
            if (v.related.empty()) return toggle_random(v);
            promote(v.related[below(v.related.size())].spec);
        } else if (u < p2) {
            if (visible.empty()) return toggle_random(v);
            svc_.bookmark(id_, *visible[below(visible.size())]);
        } else if (u < p3) {
            if (visible.empty()) return toggle_random(v);
            const VisSpec& target = *visible[below(visible.size())];
            auto duration = kAgentMinHoverMs + static_cast<std::int64_t>(below(kAgentMaxHoverMs - kAgentMinHoverMs + 1));
            clock_ += duration;
            svc_.hover(id_, target, duration);
        } else {
            if (!v.has_more) return toggle_random(v);
            svc_.load_more(id_);
        }
    }

    // Promotes the lowest-ranked item whose variable set was never specified.
    void breadth_step(const Views& v) {
        for (auto it = v.related.rbegin(); it != v.related.rend(); ++it)
            if (!specified_sets_.count(variable_set(it->spec))) return promote(it->spec);
        if (v.has_more) {
            svc_.load_more(id_);
            return;
        }
        toggle_random(v);
    }

    // Promotes the first item with the most attributes.
    void depth_step(const Views& v) {
        const RecommendationItem* best = nullptr;
        for (const auto& item : v.related)
            if (!best || variable_set(item.spec).size() > variable_set(best->spec).size()) best = &item;
        if (best) return promote(best->spec);
        toggle_random(v);
    }

    // Selects a random unselected field, or deselects one when the cap is hit
    // or the drawn field is already selected.
    void toggle_random(const Views& v) {
        const auto& fields = svc_.dataset_of(id_).fields();
        const auto& name = fields[below(fields.size())].name;
        bool selected = std::find(v.selection.begin(), v.selection.end(), name) != v.selection.end();
        if (!selected && v.selection.size() >= preset(v.algorithm).attr_limit()) {
            svc_.toggle_field(id_, v.selection[below(v.selection.size())]);
            return;
        }
        svc_.toggle_field(id_, name);
    }

    SessionService& svc_;
    std::string id_;
    const AgentPolicy& policy_;
    std::mt19937_64 rng_;
    std::int64_t& clock_;
    std::set<std::set<std::string>> specified_sets_;
};

} // namespace detail

// Drives a fresh session for `policy.steps` actions. Timestamps come from a
// simulated clock starting at 0, so identical seeds give identical logs.
inline AgentRun run_agent(const AgentPolicy& policy, const std::string& algorithm, const std::string& dataset,
                          std::shared_ptr<const Catalog> catalog) {
    policy.validate();
    auto clock = std::make_shared<std::int64_t>(0);
    SessionService svc(catalog, [clock] { return *clock; });
    AgentRun run;
    run.session = svc.create_session(dataset, algorithm);
    detail::AgentDriver driver(svc, run.session, policy, *clock);
    for (std::size_t i = 0; i < policy.steps; ++i) driver.step();
    run.log = svc.log(run.session);
    run.ndjson = svc.export_log(run.session);
    return run;
}

struct MetricsRow {
    std::string algorithm;
    std::string dataset;
    std::size_t trial = 0;
    std::size_t exposed_var_sets = 0;
    std::size_t exposed_designs = 0;
    std::size_t interacted_var_sets = 0;
    std::size_t interacted_designs = 0;

    bool operator==(const MetricsRow&) const = default;
};

// Unique variable sets and visual designs over exposed charts, and over charts
// that were specified, bookmarked or hovered for at least the threshold.
inline MetricsRow compute_metrics(const InteractionLog& log, std::int64_t hover_threshold_ms = kHoverThresholdMs) {
    std::set<std::set<std::string>> exp_sets, int_sets;
    std::set<std::string> exp_designs, int_designs;
    for (const auto& e : log) {
        bool interacted = false;
        switch (e.kind) {
        case EventKind::Exposed:
            if (!e.spec) throw MalformedLog("exposed event without a spec");
            exp_sets.insert(variable_set(*e.spec));
            exp_designs.insert(canonical_key(*e.spec));
            break;
        case EventKind::Specify:
        case EventKind::Bookmark: interacted = true; break;
        case EventKind::Hover:
            if (!e.duration_ms) throw MalformedLog("hover event without a duration");
            interacted = *e.duration_ms >= hover_threshold_ms;
            break;
        default: break;
        }
        if (interacted) {
            if (!e.spec) throw MalformedLog(std::string(to_string(e.kind)) + " event without a spec");
            int_sets.insert(variable_set(*e.spec));
            int_designs.insert(canonical_key(*e.spec));
        }
    }
    MetricsRow row;
    row.exposed_var_sets = exp_sets.size();
    row.exposed_designs = exp_designs.size();
    row.interacted_var_sets = int_sets.size();
    row.interacted_designs = int_designs.size();
    return row;
}

inline MetricsRow compute_metrics(std::string_view ndjson, std::int64_t hover_threshold_ms = kHoverThresholdMs) {
    return compute_metrics(parse_ndjson(ndjson), hover_threshold_ms);
}

struct MetricSummary {
    double mean = 0;
    double stddev = 0; // sample standard deviation
};

struct AlgorithmSummary {
    std::string algorithm;
    MetricSummary exposed_var_sets, exposed_designs, interacted_var_sets, interacted_designs;
};

struct MeanDifference {
    std::string label; // "a - b"
    std::string minuend, subtrahend;
    double exposed_var_sets = 0, exposed_designs = 0, interacted_var_sets = 0, interacted_designs = 0;
};

struct MetricsReport {
    std::string dataset;
    std::vector<MetricsRow> rows; // ordered by (algorithm, trial)
    std::vector<AlgorithmSummary> summaries;
    std::vector<MeanDifference> differences;

    const AlgorithmSummary& summary(std::string_view algorithm) const {
        for (const auto& s : summaries)
            if (s.algorithm == algorithm) return s;
        throw UnknownPreset("no summary for '" + std::string(algorithm) + "'");
    }
};

namespace detail {

inline MetricSummary summarize(const std::vector<double>& xs) {
    MetricSummary s;
    if (xs.empty()) return s;
    double sum = 0;
    for (double x : xs) sum += x;
    s.mean = sum / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return s;
}

inline std::string format_double(double v, int precision = 3) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    return buf;
}

} // namespace detail

// Runs `trials` seeded sessions (seeds 0..trials-1) per algorithm. Trials run
// on `threads` workers; results are reduced in (algorithm, seed) order.
inline MetricsReport compare(const std::vector<std::string>& algorithms, const std::string& dataset, std::size_t trials,
                             const AgentPolicy& policy_template, std::shared_ptr<const Catalog> catalog,
                             std::size_t threads = 0, std::int64_t hover_threshold_ms = kHoverThresholdMs) {
    if (trials < 1) throw InvalidArgument("trials must be >= 1");
    policy_template.validate();
    for (const auto& a : algorithms) (void)preset(a);
    (void)catalog->engine(dataset);

    MetricsReport report;
    report.dataset = dataset;
    report.rows.resize(algorithms.size() * trials);
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, report.rows.size());

    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    auto worker = [&] {
        for (std::size_t job; (job = next.fetch_add(1)) < report.rows.size();) {
            try {
                const auto& algo = algorithms[job / trials];
                AgentPolicy p = policy_template;
                p.seed = job % trials;
                auto run = run_agent(p, algo, dataset, catalog);
                MetricsRow row = compute_metrics(run.log, hover_threshold_ms);
                row.algorithm = algo;
                row.dataset = dataset;
                row.trial = p.seed;
                report.rows[job] = std::move(row);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);

    for (std::size_t a = 0; a < algorithms.size(); ++a) {
        std::vector<double> ev, ed, iv, id;
        for (std::size_t t = 0; t < trials; ++t) {
            const auto& r = report.rows[a * trials + t];
            ev.push_back(static_cast<double>(r.exposed_var_sets));
            ed.push_back(static_cast<double>(r.exposed_designs));
            iv.push_back(static_cast<double>(r.interacted_var_sets));
            id.push_back(static_cast<double>(r.interacted_designs));
        }
        report.summaries.push_back({algorithms[a], detail::summarize(ev), detail::summarize(ed), detail::summarize(iv),
                                    detail::summarize(id)});
    }

    auto has = [&](const std::string& a) { return std::find(algorithms.begin(), algorithms.end(), a) != algorithms.end(); };
    auto diff = [&](const std::string& a, const std::string& b) {
        const auto& sa = report.summary(a);
        const auto& sb = report.summary(b);
        report.differences.push_back({a + " - " + b, a, b, sa.exposed_var_sets.mean - sb.exposed_var_sets.mean,
                                      sa.exposed_designs.mean - sb.exposed_designs.mean,
                                      sa.interacted_var_sets.mean - sb.interacted_var_sets.mean,
                                      sa.interacted_designs.mean - sb.interacted_designs.mean});
    };
    // BFS - DFS per oracle, then Dziban - CompassQL per traversal
    for (std::string oracle : {"compassql", "dziban"})
        if (has(oracle + "-bfs") && has(oracle + "-dfs")) diff(oracle + "-bfs", oracle + "-dfs");
    for (std::string trav : {"bfs", "dfs"})
        if (has("dziban-" + trav) && has("compassql-" + trav)) diff("dziban-" + trav, "compassql-" + trav);
    return report;
}

inline std::string to_csv(const MetricsReport& report) {
    std::ostringstream out;
    out << "algorithm,dataset,trial,exposed_var_sets,exposed_designs,interacted_var_sets,interacted_designs\n";
    for (const auto& r : report.rows)
        out << r.algorithm << ',' << r.dataset << ',' << r.trial << ',' << r.exposed_var_sets << ','
            << r.exposed_designs << ',' << r.interacted_var_sets << ',' << r.interacted_designs << '\n';
    return out.str();
}

inline std::string summary_table(const MetricsReport& report) {
    std::ostringstream out;
    auto cell = [](const MetricSummary& m) { return detail::format_double(m.mean, 2) + " +/- " + detail::format_double(m.stddev, 2); };
    char line[256];
    std::snprintf(line, sizeof line, "%-16s %-18s %-18s %-18s %-18s\n", "algorithm", "exposed_var_sets",
                  "exposed_designs", "interacted_vars", "interacted_designs");
    out << "dataset: " << report.dataset << "\n" << line;
    for (const auto& s : report.summaries) {
        std::snprintf(line, sizeof line, "%-16s %-18s %-18s %-18s %-18s\n", s.algorithm.c_str(),
                      cell(s.exposed_var_sets).c_str(), cell(s.exposed_designs).c_str(),
                      cell(s.interacted_var_sets).c_str(), cell(s.interacted_designs).c_str());
        out << line;
    }
    if (!report.differences.empty()) out << "\nmean differences\n";
    for (const auto& d : report.differences) {
        std::snprintf(line, sizeof line, "%-30s exposed_var_sets %+8.3f  exposed_designs %+8.3f  interacted_vars %+8.3f  interacted_designs %+8.3f\n",
                      d.label.c_str(), d.exposed_var_sets, d.exposed_designs, d.interacted_var_sets,
                      d.interacted_designs);
        out << line;
    }
    return out.str();
}

} // namespace vizrec
