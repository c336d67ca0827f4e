#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "vizrec/session.hpp"

namespace vizrec {

namespace detail {

inline int http_status(const Error& e) {
    std::string_view k = e.kind();
    if (k == "UnknownSession" || k == "UnknownDataset" || k == "UnknownField" || k == "UnknownPreset") return 404;
    if (k == "CapExceeded" || k == "NotExposed" || k == "InvalidPage") return 409;
    return 400;
}

inline void send_json(httplib::Response& res, const nlohmann::json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

inline nlohmann::json parse_body(const httplib::Request& req) {
    try {
        return req.body.empty() ? nlohmann::json::object() : nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed request body: ") + e.what());
    }
}

template <class F>
httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const Error& e) {
            send_json(res, {{"error", e.kind()}, {"message", e.what()}}, http_status(e));
        } catch (const nlohmann::json::exception& e) {
            send_json(res, {{"error", "ParseError"}, {"message", e.what()}}, 400);
        }
    };
}

} // namespace detail

// Registers the session API on `server`. Chart payloads are Vega-Lite documents.
inline void mount_routes(httplib::Server& server, SessionService& svc) {
    using detail::guarded;
    using detail::parse_body;
    using detail::send_json;
    using nlohmann::json;

    auto views_json = [&svc](const Views& v) { return views_to_json(v, &svc.catalog().engine(v.dataset)->dataset()); };

    server.Get("/datasets", guarded([&svc](const httplib::Request&, httplib::Response& res) {
        json out = json::array();
        for (const auto& name : svc.catalog().names()) {
            const auto& ds = svc.catalog().engine(name)->dataset();
            json fields = json::array();
            for (const auto& f : ds.fields()) fields.push_back({{"name", f.name}, {"type", to_string(f.type)}});
            out.push_back({{"name", name}, {"rows", ds.row_count()}, {"fields", fields}});
        }
        send_json(res, out);
    }));

    server.Get("/algorithms", guarded([](const httplib::Request&, httplib::Response& res) {
        send_json(res, preset_names());
    }));

    server.Post("/sessions", guarded([&svc, views_json](const httplib::Request& req, httplib::Response& res) {
        auto body = parse_body(req);
        auto id = svc.create_session(body.at("dataset").get<std::string>(), body.at("algorithm").get<std::string>());
        send_json(res, {{"id", id}, {"views", views_json(svc.views(id))}}, 201);
    }));

    server.Post(R"(/sessions/([^/]+)/fields/([^/]+)/toggle)",
                guarded([&svc, views_json](const httplib::Request& req, httplib::Response& res) {
                    send_json(res, views_json(svc.toggle_field(req.matches[1], req.matches[2])));
                }));

    server.Post(R"(/sessions/([^/]+)/promote)", guarded([&svc, views_json](const httplib::Request& req, httplib::Response& res) {
        auto body = parse_body(req);
        send_json(res, views_json(svc.promote(req.matches[1], parse_chart(body.at("spec")))));
    }));

    server.Post(R"(/sessions/([^/]+)/bookmark)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
        auto body = parse_body(req);
        bool on = svc.bookmark(req.matches[1], parse_chart(body.at("spec")));
        send_json(res, {{"bookmarked", on}});
    }));

    server.Post(R"(/sessions/([^/]+)/hover)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
        auto body = parse_body(req);
        svc.hover(req.matches[1], parse_chart(body.at("spec")), body.at("duration_ms").get<std::int64_t>());
        send_json(res, {{"ok", true}});
    }));

    server.Post(R"(/sessions/([^/]+)/more)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
        std::string id = req.matches[1];
        auto page = svc.load_more(id);
        const auto& ds = svc.dataset_of(id);
        json items = json::array();
        for (const auto& item : page.items)
            items.push_back({{"chart", serialize(item.spec, ds.name(), &ds)}, {"score", item.score.value}});
        send_json(res, {{"page_index", page.page_index}, {"has_more", page.has_more}, {"items", items}});
    }));

    server.Get(R"(/sessions/([^/]+)/views)", guarded([&svc, views_json](const httplib::Request& req, httplib::Response& res) {
        send_json(res, views_json(svc.views(req.matches[1])));
    }));

    server.Get(R"(/sessions/([^/]+)/log)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
        res.set_content(svc.export_log(req.matches[1]), "application/x-ndjson");
    }));
}

} // namespace vizrec
