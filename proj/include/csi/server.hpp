#pragma once

// HTTP + WebSocket front end for the orchestrator.
//
// REST:
//   POST /sessions                              body: SessionConfig -> {session_id, subgroups}
//   POST /sessions/{id}/questions/{qid}/open    -> {question_id, opened_ms, deadline_ms}
//   POST /sessions/{id}/close                   -> {question_id, selection, correct}
//   GET  /sessions/{id}/report/{qid}            -> ForensicReport
//   GET  /sessions/{id}/events                  -> JSON Lines event log
// WebSocket: /sessions/{id}/ws?participant=<pid>
//   client -> server {type:"post", text}
//   server -> client question / message / deadline_warning / closed / error frames
//
// Every session lives on one io_context thread; the wall clock since question
// open is the session's relative time, and a timer closes questions at the deadline.

#include <memory>
#include <string>

namespace csi {

struct ServerOptions {
    std::string address = "127.0.0.1";
    unsigned short port = 8080;  // 0 picks a free port
    int tick_ms = 100;
};

class Server {
public:
    explicit Server(ServerOptions options);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    unsigned short port() const;

    /// Serves on the calling thread until stop().
    void run();
    /// Serves on a background thread.
    void start();
    void stop();

private:
    class Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace csi
