#include "csi/server.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <chrono>
#include <deque>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <thread>

#include "csi/error.hpp"
#include "csi/orchestrator.hpp"

namespace csi {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using Clock = std::chrono::steady_clock;

namespace {

http::status status_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::SessionNotFound:
        case ErrorCode::QuestionNotFound: return http::status::not_found;
        case ErrorCode::BadState:
        case ErrorCode::DeadlinePassed: return http::status::conflict;
        case ErrorCode::NotJoined: return http::status::forbidden;
        case ErrorCode::ConfigInvalid:
        case ErrorCode::RosterTooSmall:
        case ErrorCode::PartitionInfeasible: return http::status::unprocessable_entity;
        default: return http::status::bad_request;
    }
}

json error_json(const Error& e) {
    json j{{"error", to_string(e.code())}, {"message", e.what()}};
    if (const auto* ce = dynamic_cast<const ConfigError*>(&e)) j["violations"] = ce->violations();
    return j;
}

std::vector<std::string> split_path(std::string_view target) {
    std::vector<std::string> parts;
    const auto q = target.find('?');
    std::string_view path = target.substr(0, q);
    std::size_t pos = 0;
    while (pos <= path.size()) {
        const auto slash = path.find('/', pos);
        const auto end = slash == std::string_view::npos ? path.size() : slash;
        if (end > pos) parts.emplace_back(path.substr(pos, end - pos));
        if (slash == std::string_view::npos) break;
        pos = slash + 1;
    }
    return parts;
}

std::optional<std::string> query_param(std::string_view target, std::string_view name) {
    const std::string t(target);
    const auto q = t.find('?');
    if (q == std::string::npos) return std::nullopt;
    std::size_t pos = q + 1;
    while (pos < t.size()) {
        auto amp = t.find('&', pos);
        if (amp == std::string::npos) amp = t.size();
        const auto eq = t.find('=', pos);
        if (eq < amp && t.compare(pos, eq - pos, name) == 0) return t.substr(eq + 1, amp - eq - 1);
        pos = amp + 1;
    }
    return std::nullopt;
}

}  // namespace

class Server::Impl {
public:
    class WsConn;

    // Fans frames out to the WebSocket connections of each recipient.
    class FanoutSink final : public DeliverySink {
    public:
        void deliver(const std::string& recipient, const json& frame) override;
        std::map<std::string, std::set<std::shared_ptr<WsConn>>> clients;
    };

    struct Runtime {
        Clock::time_point created;
        std::optional<Clock::time_point> opened;
        std::unique_ptr<FanoutSink> sink;
    };

    class WsConn : public std::enable_shared_from_this<WsConn> {
    public:
        WsConn(Impl& server, tcp::socket socket, std::string session_id, std::string participant)
            : server_(server), ws_(std::move(socket)), session_id_(std::move(session_id)),
              participant_(std::move(participant)) {}

        void accept(http::request<http::string_body> req) {
            ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
                if (ec) return;
                self->server_.on_ws_open(self);
                self->read();
            });
        }

        void send(std::string text) {
            outbox_.push_back(std::move(text));
            if (outbox_.size() == 1) write_next();
        }

        void close() {
            ws_.async_close(websocket::close_code::normal, [self = shared_from_this()](beast::error_code) {});
        }

        const std::string& session_id() const { return session_id_; }
        const std::string& participant() const { return participant_; }

    private:
        void read() {
            ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
                if (ec) {
                    self->server_.on_ws_closed(self);
                    return;
                }
                const std::string text = beast::buffers_to_string(self->buffer_.data());
                self->buffer_.consume(self->buffer_.size());
                self->server_.on_ws_frame(self, text);
                self->read();
            });
        }

        void write_next() {
            ws_.text(true);
            ws_.async_write(net::buffer(outbox_.front()),
                            [self = shared_from_this()](beast::error_code ec, std::size_t) {
                                if (ec) {
                                    self->outbox_.clear();
                                    return;
                                }
                                self->outbox_.pop_front();
                                if (!self->outbox_.empty()) self->write_next();
                            });
        }

        Impl& server_;
        websocket::stream<beast::tcp_stream> ws_;
        beast::flat_buffer buffer_;
        std::deque<std::string> outbox_;
        std::string session_id_;
        std::string participant_;
    };

    class HttpConn : public std::enable_shared_from_this<HttpConn> {
    public:
        HttpConn(Impl& server, tcp::socket socket) : server_(server), stream_(std::move(socket)) {}

        void read() {
            req_ = {};
            http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
                if (ec) return;
                self->on_request();
            });
        }

    private:
        void on_request() {
            if (websocket::is_upgrade(req_)) {
                server_.upgrade(stream_.release_socket(), std::move(req_));
                return;
            }
            res_ = std::make_shared<http::response<http::string_body>>(server_.handle(req_));
            res_->keep_alive(req_.keep_alive());
            res_->prepare_payload();
            http::async_write(stream_, *res_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
                if (ec) return;
                if (!self->res_->keep_alive()) {
                    beast::error_code ignored;
                    self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
                    return;
                }
                self->read();
            });
        }

        Impl& server_;
        beast::tcp_stream stream_;
        beast::flat_buffer buffer_;
        http::request<http::string_body> req_;
        std::shared_ptr<http::response<http::string_body>> res_;
    };

    explicit Impl(ServerOptions options)
        : options_(std::move(options)), acceptor_(ioc_), timer_(ioc_) {
        const tcp::endpoint ep(net::ip::make_address(options_.address), options_.port);
        acceptor_.open(ep.protocol());
        acceptor_.set_option(net::socket_base::reuse_address(true));
        acceptor_.bind(ep);
        acceptor_.listen();
        do_accept();
        schedule_tick();
    }

    unsigned short port() const { return acceptor_.local_endpoint().port(); }

    void run() { ioc_.run(); }

    void stop() {
        net::post(ioc_, [this] {
            beast::error_code ec;
            acceptor_.close(ec);
            timer_.cancel();
            ioc_.stop();
        });
    }

    std::thread thread;

private:
    void do_accept() {
        acceptor_.async_accept([this](beast::error_code ec, tcp::socket socket) {
            if (ec) return;
            std::make_shared<HttpConn>(*this, std::move(socket))->read();
            do_accept();
        });
    }

    void schedule_tick() {
        timer_.expires_after(std::chrono::milliseconds(options_.tick_ms));
        timer_.async_wait([this](beast::error_code ec) {
            if (ec) return;
            tick();
            schedule_tick();
        });
    }

    // Advances open questions to wall-clock time and closes them at the deadline.
    void tick() {
        for (auto& [id, rt] : runtimes_) {
            if (!rt.opened) continue;
            auto& s = orchestrator_.session(id);
            if (s.state() != SessionState::question_open) continue;
            const auto rel = relative_ms(rt);
            try {
                if (rel >= s.deadline_ms()) {
                    s.close_question();
                    rt.opened.reset();
                } else {
                    s.advance(rel);
                }
            } catch (const Error& e) {
                std::cerr << "session " << id << ": " << e.what() << '\n';
            }
        }
    }

    static std::int64_t relative_ms(const Runtime& rt) {
        return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - *rt.opened).count();
    }

    Runtime& runtime(const std::string& id) {
        const auto it = runtimes_.find(id);
        if (it == runtimes_.end()) throw Error(ErrorCode::SessionNotFound, id);
        return it->second;
    }

    static http::response<http::string_body> reply(const http::request<http::string_body>& req, http::status status,
                                                   std::string body, const char* content_type = "application/json") {
        http::response<http::string_body> res{status, req.version()};
        res.set(http::field::content_type, content_type);
        res.body() = std::move(body);
        return res;
    }

    http::response<http::string_body> handle(const http::request<http::string_body>& req) {
        const auto parts = split_path(std::string_view(req.target().data(), req.target().size()));
        const auto method = req.method();
        try {
            if (parts.size() == 1 && parts[0] == "sessions" && method == http::verb::post) {
                SessionConfig config;
                try {
                    config = json::parse(req.body()).get<SessionConfig>();
                } catch (const json::exception& e) {
                    throw Error(ErrorCode::ParseError, e.what());
                }
                auto sink = std::make_unique<FanoutSink>();
                const auto id = orchestrator_.create_session(std::move(config), sink.get());
                runtimes_.emplace(id, Runtime{Clock::now(), std::nullopt, std::move(sink)});
                const auto& s = orchestrator_.session(id);
                return reply(req, http::status::created,
                             json{{"session_id", id}, {"subgroups", s.plan().subgroups}}.dump());
            }
            if (parts.size() >= 2 && parts[0] == "sessions") {
                const std::string& id = parts[1];
                auto& rt = runtime(id);
                auto& s = orchestrator_.session(id);
                if (parts.size() == 5 && parts[2] == "questions" && parts[4] == "open" && method == http::verb::post) {
                    const auto at = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - rt.created);
                    const auto& rec = s.open_question(parts[3], at.count());
                    rt.opened = Clock::now();
                    return reply(req, http::status::ok,
                                 json{{"question_id", parts[3]},
                                      {"opened_ms", rec.payload.at("opened_ms")},
                                      {"deadline_ms", rec.payload.at("deadline_ms")}}
                                     .dump());
                }
                if (parts.size() == 3 && parts[2] == "close" && method == http::verb::post) {
                    if (!rt.opened) throw Error(ErrorCode::BadState, "no open question");
                    const auto r = s.close_question(relative_ms(rt));
                    rt.opened.reset();
                    return reply(req, http::status::ok,
                                 json{{"question_id", r.question_id}, {"selection", r.selection}, {"correct", r.correct}}
                                     .dump());
                }
                if (parts.size() == 4 && parts[2] == "report" && method == http::verb::get)
                    return reply(req, http::status::ok, json(s.generate_report(parts[3])).dump());
                if (parts.size() == 3 && parts[2] == "events" && method == http::verb::get)
                    return reply(req, http::status::ok, s.export_event_log(), "application/jsonl");
            }
            return reply(req, http::status::not_found, json{{"error", "NotFound"}, {"message", "no such route"}}.dump());
        } catch (const Error& e) {
            return reply(req, status_for(e.code()), error_json(e).dump());
        }
    }

    void upgrade(tcp::socket socket, http::request<http::string_body> req) {
        const std::string_view target(req.target().data(), req.target().size());
        const auto parts = split_path(target);
        const auto participant = query_param(target, "participant");
        auto refuse = [&](http::status status, const std::string& why) {
            auto res = std::make_shared<http::response<http::string_body>>(
                reply(req, status, json{{"error", "upgrade refused"}, {"message", why}}.dump()));
            res->prepare_payload();
            auto stream = std::make_shared<beast::tcp_stream>(std::move(socket));
            http::async_write(*stream, *res, [stream, res](beast::error_code, std::size_t) {});
        };
        if (parts.size() != 3 || parts[0] != "sessions" || parts[2] != "ws" || !participant)
            return refuse(http::status::not_found, "expected /sessions/{id}/ws?participant=<pid>");
        try {
            runtime(parts[1]);
            orchestrator_.session(parts[1]).subgroup_of(*participant);
        } catch (const Error& e) {
            return refuse(status_for(e.code()), e.what());
        }
        std::make_shared<WsConn>(*this, std::move(socket), parts[1], *participant)->accept(std::move(req));
    }

    void on_ws_open(const std::shared_ptr<WsConn>& conn) {
        auto& rt = runtimes_.at(conn->session_id());
        rt.sink->clients[conn->participant()].insert(conn);
        auto& s = orchestrator_.session(conn->session_id());
        const auto& g = s.subgroup_of(conn->participant());
        conn->send(json{{"type", "joined"}, {"participant", conn->participant()}, {"subgroup_id", g.id}}.dump());
        if (const auto qid = s.open_question_id()) {
            for (const auto& q : s.config().questions)
                if (q.id == *qid)
                    conn->send(json{{"type", "question"},
                                    {"question", redacted_question_json(q)},
                                    {"deadline_ms", q.deadline_ms()},
                                    {"subgroup_id", g.id}}
                                   .dump());
        }
    }

    void on_ws_closed(const std::shared_ptr<WsConn>& conn) {
        const auto it = runtimes_.find(conn->session_id());
        if (it == runtimes_.end()) return;
        auto& clients = it->second.sink->clients;
        const auto c = clients.find(conn->participant());
        if (c == clients.end()) return;
        c->second.erase(conn);
        if (c->second.empty()) clients.erase(c);
    }

    void on_ws_frame(const std::shared_ptr<WsConn>& conn, const std::string& text) {
        try {
            json frame;
            try {
                frame = json::parse(text);
            } catch (const json::exception& e) {
                throw Error(ErrorCode::ParseError, e.what());
            }
            if (frame.value("type", "") != "post" || !frame.contains("text") || !frame.at("text").is_string())
                throw Error(ErrorCode::MessageInvalid, "expected {type: \"post\", text}");
            auto& rt = runtime(conn->session_id());
            if (!rt.opened) throw Error(ErrorCode::BadState, "no open question");
            orchestrator_.session(conn->session_id())
                .post_message(conn->participant(), frame.at("text").get<std::string>(), relative_ms(rt));
        } catch (const Error& e) {
            conn->send(json{{"type", "error"}, {"error", to_string(e.code())}, {"message", e.what()}}.dump());
        }
    }

    ServerOptions options_;
    net::io_context ioc_;
    tcp::acceptor acceptor_;
    net::steady_timer timer_;
    Orchestrator orchestrator_;
    std::map<std::string, Runtime> runtimes_;
};

void Server::Impl::FanoutSink::deliver(const std::string& recipient, const json& frame) {
    const auto it = clients.find(recipient);
    if (it == clients.end()) return;
    const std::string text = frame.dump();
    for (const auto& c : it->second) c->send(text);
}

Server::Server(ServerOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

Server::~Server() {
    if (impl_->thread.joinable()) {
        impl_->stop();
        impl_->thread.join();
    }
}

unsigned short Server::port() const { return impl_->port(); }

void Server::run() { impl_->run(); }

void Server::start() {
    impl_->thread = std::thread([this] { impl_->run(); });
}

void Server::stop() {
    impl_->stop();
    if (impl_->thread.joinable() && impl_->thread.get_id() != std::this_thread::get_id()) impl_->thread.join();
}

}  // namespace csi
