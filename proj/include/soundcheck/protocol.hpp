#pragma once

/// @file protocol.hpp
/// Newline-delimited JSON protocol for external models.
///
///   {"op":"info"}                  -> {"vocab":71,"caps":[...],"max_ctx":N}
///   {"op":"dist","tokens":[...]}   -> {"probs":[71 numbers]}
///   {"op":"dist_batch","seqs":[...]} -> {"probs":[[71],...]}
///   {"op":"probe","tokens":[...]}  -> {"board":[[13] x 64]}
///   {"op":"grad_cos","tokens":[...]} -> {"cos_dist":x}
///
/// Failures are answered with {"error":"..."} and the connection stays open.
///
/// Endpoints: "exec:<shell command>" (child process on stdin/stdout),
/// "tcp:<host>:<port>", "unix:<path>".

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <functional>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "soundcheck/model.hpp"

namespace soundcheck {

struct Endpoint {
    enum class Kind : std::uint8_t { Exec, Tcp, Unix };
    Kind kind = Kind::Exec;
    std::string target;  ///< command, host, or socket path
    int port = 0;

    /// Throws std::invalid_argument.
    [[nodiscard]] static Endpoint parse(std::string_view text);
    [[nodiscard]] std::string str() const;
};

class Session;

/// A model behind the wire protocol. Holds up to `sessions` connections, each
/// with one request in flight. A session that times out or breaks is dropped
/// and reopened on next use. SIGPIPE is ignored process-wide once a client
/// has been created.
class ProtocolModel final : public Model {
public:
    explicit ProtocolModel(Endpoint endpoint, std::chrono::milliseconds timeout = std::chrono::seconds(30),
                           int sessions = 1);
    ~ProtocolModel() override;

    ProtocolModel(const ProtocolModel&) = delete;
    ProtocolModel& operator=(const ProtocolModel&) = delete;

    [[nodiscard]] std::string name() const override { return endpoint_.str(); }
    [[nodiscard]] Capabilities capabilities() const override { return caps_; }
    [[nodiscard]] int max_ctx() const noexcept { return max_ctx_; }
    [[nodiscard]] int vocab() const noexcept { return vocab_; }

    [[nodiscard]] ModelDistribution dist(TokenSpan tokens) override;
    [[nodiscard]] std::vector<ModelDistribution> dist_batch(std::span<const TokenSequence> seqs) override;
    [[nodiscard]] ProbeBoard probe(TokenSpan tokens) override;
    [[nodiscard]] double grad_cos(TokenSpan tokens) override;

    /// Sends one raw line and returns the raw response line.
    [[nodiscard]] std::string raw_request(const std::string& line);

private:
    class Lease;
    [[nodiscard]] std::unique_ptr<Session> open_session() const;
    [[nodiscard]] std::string exchange(const std::string& line);
    void check_context(TokenSpan tokens) const;

    Endpoint endpoint_;
    std::chrono::milliseconds timeout_;
    int max_sessions_;
    Capabilities caps_;
    int vocab_ = 0;
    int max_ctx_ = 0;

    std::mutex mu_;
    std::condition_variable cv_;
    std::vector<std::unique_ptr<Session>> idle_;
    int open_ = 0;
};

/// Answers one request line on behalf of `model`; never throws.
[[nodiscard]] std::string handle_request_line(Model& model, std::string_view line, int max_ctx = 4096);

/// Serves requests line by line until end of input.
void serve_stream(Model& model, std::istream& in, std::ostream& out, int max_ctx = 4096);

/// Listens on a tcp or unix endpoint and serves each connection on its own
/// thread until `stop` becomes true. `on_ready` receives the bound port (tcp)
/// or 0 (unix) once the socket is listening. Throws std::runtime_error if the
/// socket cannot be set up.
void serve_endpoint(Model& model, const Endpoint& endpoint, const std::atomic<bool>& stop,
                    const std::function<void(int)>& on_ready = {}, int max_ctx = 4096);

struct ConformanceCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Exercises every declared capability of `model` and the error path of the
/// protocol: normalization, batch order, probe shape, grad_cos range, and a
/// malformed request answered with an error record on a live connection.
[[nodiscard]] std::vector<ConformanceCheck> run_conformance(ProtocolModel& model);

}  // namespace soundcheck
