// vizrec: command-line front end for the recommendation engine.
//
//   vizrec bench --dataset movies --algorithms compassql-bfs,dziban-bfs --trials 100 --steps 30 --out report.csv
//   vizrec recommend --dataset movies --algorithm dziban-bfs --select "US Gross,Major Genre"
//   vizrec serve --port 8080
//   vizrec datasets

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "vizrec/http_service.hpp"
#include "vizrec/vizrec.hpp"

#ifndef VIZREC_DATA_DIR
#define VIZREC_DATA_DIR "data"
#endif

namespace {

std::string default_data_dir() {
    if (const char* env = std::getenv("VIZREC_DATA_DIR")) return env;
    return VIZREC_DATA_DIR;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream in(s);
    for (std::string item; std::getline(in, item, ',');) {
        auto t = vizrec::detail::trim(item);
        if (!t.empty()) out.emplace_back(t);
    }
    return out;
}

std::shared_ptr<vizrec::Catalog> open_catalog(const std::string& data_dir, const std::string& tables) {
    auto catalog = vizrec::load_catalog(data_dir);
    if (!tables.empty()) {
        auto t = vizrec::OracleTables::from_file(tables);
        // re-register with the custom tables
        auto replaced = std::make_shared<vizrec::Catalog>();
        for (const auto& name : catalog->names()) replaced->add(catalog->engine(name)->dataset_ptr(), t);
        return replaced;
    }
    return catalog;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Visualization recommendation engine"};
    app.require_subcommand(1);
    std::string data_dir = default_data_dir();
    std::string tables_path;
    app.add_option("--data-dir", data_dir, "Directory of .csv/.json datasets")->capture_default_str();
    app.add_option("--tables", tables_path, "JSON file overriding oracle weights and edit costs");

    // bench
    auto* bench = app.add_subcommand("bench", "Run scripted-agent sessions and report exposure/interaction metrics");
    std::string bench_dataset, algorithms = "compassql-bfs,compassql-dfs,dziban-bfs,dziban-dfs", out_path, policy = "random";
    std::size_t trials = vizrec::kDefaultBenchmarkTrials, steps = 30, threads = 0;
    auto defaults = vizrec::default_benchmark_policy();
    double promote = defaults.promote_prob, bookmark = defaults.bookmark_prob, hover = defaults.hover_prob;
    std::int64_t hover_threshold = vizrec::kHoverThresholdMs;
    bench->add_option("--dataset", bench_dataset, "Dataset name")->required();
    bench->add_option("--algorithms", algorithms, "Comma-separated preset names")->capture_default_str();
    bench->add_option("--trials", trials, "Trials per algorithm (seeds 0..trials-1)")->capture_default_str();
    bench->add_option("--steps", steps, "Agent actions per trial")->capture_default_str();
    bench->add_option("--policy", policy, "random | breadth | depth")->capture_default_str();
    bench->add_option("--promote", promote, "RandomWalker promote probability")->capture_default_str();
    bench->add_option("--bookmark", bookmark, "RandomWalker bookmark probability")->capture_default_str();
    bench->add_option("--hover", hover, "RandomWalker hover probability")->capture_default_str();
    bench->add_option("--hover-threshold", hover_threshold, "Minimum hover (ms) counted as interaction")->capture_default_str();
    bench->add_option("--threads", threads, "Worker threads (0 = hardware concurrency)");
    bench->add_option("--out", out_path, "CSV output path (default: stdout)");

    // recommend
    auto* rec = app.add_subcommand("recommend", "Print the specified view and related views for a selection");
    std::string rec_dataset, rec_algorithm = "compassql-bfs", select;
    std::size_t page = 0;
    rec->add_option("--dataset", rec_dataset, "Dataset name")->required();
    rec->add_option("--algorithm", rec_algorithm, "Preset name")->capture_default_str();
    rec->add_option("--select", select, "Comma-separated attribute names (empty = univariate gallery)");
    rec->add_option("--page", page, "Related-views page")->capture_default_str();

    // serve
    auto* serve = app.add_subcommand("serve", "Serve the session HTTP API");
    int port = 8080;
    std::string host = "127.0.0.1";
    serve->add_option("--port", port, "TCP port")->capture_default_str();
    serve->add_option("--host", host, "Bind address")->capture_default_str();

    auto* list = app.add_subcommand("datasets", "List datasets with their field census");

    CLI11_PARSE(app, argc, argv);

    try {
        auto catalog = open_catalog(data_dir, tables_path);

        if (*bench) {
            vizrec::AgentPolicy p;
            if (policy == "random") p = vizrec::AgentPolicy::random_walker(promote, bookmark, hover, steps);
            else if (policy == "breadth") p = vizrec::AgentPolicy::breadth_seeker(steps);
            else if (policy == "depth") p = vizrec::AgentPolicy::depth_seeker(steps);
            else throw vizrec::InvalidArgument("unknown policy '" + policy + "'");
            auto report = vizrec::compare(split_list(algorithms), bench_dataset, trials, p, catalog, threads, hover_threshold);
            auto csv = vizrec::to_csv(report);
            if (out_path.empty()) {
                std::cerr << vizrec::summary_table(report);
                std::cout << csv;
            } else {
                std::ofstream out(out_path, std::ios::binary);
                if (!out) throw vizrec::InvalidArgument("cannot write " + out_path);
                out << csv;
                std::cout << vizrec::summary_table(report);
            }
        } else if (*rec) {
            auto engine = catalog->engine(rec_dataset);
            const auto& ds = engine->dataset();
            auto config = vizrec::preset(rec_algorithm);
            auto fields = split_list(select);
            std::set<std::string> selection(fields.begin(), fields.end());
            for (const auto& f : selection) (void)ds.index_of(f);
            auto specified = engine->specified_view(selection, config);
            auto related = engine->related_views(specified, config, page);
            nlohmann::json items = nlohmann::json::array();
            for (const auto& item : related.items) {
                nlohmann::json breakdown = nlohmann::json::object();
                for (const auto& [rule, v] : item.score.breakdown) breakdown[rule] = v;
                items.push_back({{"chart", vizrec::serialize(item.spec, ds.name(), &ds)},
                                 {"score", item.score.value},
                                 {"breakdown", breakdown}});
            }
            nlohmann::json out{{"algorithm", config.name},
                               {"selection", fields},
                               {"specified", specified ? vizrec::serialize(*specified, ds.name(), &ds) : nlohmann::json(nullptr)},
                               {"related", {{"page", related.page_index}, {"has_more", related.has_more}, {"items", items}}}};
            std::cout << out.dump(2) << "\n";
        } else if (*serve) {
            vizrec::SessionService svc(catalog);
            httplib::Server server;
            vizrec::mount_routes(server, svc);
            std::cerr << "listening on http://" << host << ":" << port << "\n";
            if (!server.listen(host, port)) throw vizrec::InvalidArgument("cannot bind " + host + ":" + std::to_string(port));
        } else if (*list) {
            for (const auto& name : catalog->names()) {
                const auto& ds = catalog->engine(name)->dataset();
                std::size_t counts[3] = {0, 0, 0};
                for (const auto& f : ds.fields()) ++counts[static_cast<int>(f.type)];
                std::cout << name << ": " << ds.row_count() << " rows, " << ds.field_count() << " fields (" << counts[0]
                          << " nominal, " << counts[1] << " temporal, " << counts[2] << " quantitative)\n";
                for (const auto& f : ds.fields()) std::cout << "  " << f.name << " [" << vizrec::to_string(f.type) << "]\n";
            }
        }
    } catch (const vizrec::Error& e) {
        std::cerr << "error (" << e.kind() << "): " << e.what() << "\n";
        return 1;
    }
    return 0;
}
