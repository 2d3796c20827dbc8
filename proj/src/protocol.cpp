#include "soundcheck/protocol.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <istream>
#include <mutex>
#include <ostream>
#include <thread>

#include <json.hpp>

namespace soundcheck {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

Endpoint Endpoint::parse(std::string_view text) {
    Endpoint e;
    if (text.starts_with("exec:")) {
        e.kind = Kind::Exec;
        e.target = std::string(text.substr(5));
    } else if (text.starts_with("unix:")) {
        e.kind = Kind::Unix;
        e.target = std::string(text.substr(5));
    } else if (text.starts_with("tcp:")) {
        e.kind = Kind::Tcp;
        const std::string_view rest = text.substr(4);
        const auto colon = rest.rfind(':');
        if (colon == std::string_view::npos)
            throw std::invalid_argument("tcp endpoint needs host:port");
        e.target = std::string(rest.substr(0, colon));
        const std::string port(rest.substr(colon + 1));
        std::size_t used = 0;
        try {
            e.port = std::stoi(port, &used);
        } catch (const std::logic_error&) {
            used = 0;
        }
        if (used != port.size() || port.empty() || e.port < 0 || e.port > 65535)
            throw std::invalid_argument("bad tcp port '" + port + "'");
    } else {
        throw std::invalid_argument("unknown endpoint '" + std::string(text) + "'");
    }
    if (e.target.empty())
        throw std::invalid_argument("empty endpoint target");
    return e;
}

std::string Endpoint::str() const {
    switch (kind) {
    case Kind::Exec: return "exec:" + target;
    case Kind::Tcp: return "tcp:" + target + ":" + std::to_string(port);
    case Kind::Unix: return "unix:" + target;
    }
    return "?";
}

// ── Client side ─────────────────────────────────────────────────────────────

class Session {
public:
    Session(int read_fd, int write_fd, pid_t child) : rfd_(read_fd), wfd_(write_fd), child_(child) {}
    ~Session() {
        if (wfd_ != rfd_ && wfd_ >= 0)
            ::close(wfd_);
        if (rfd_ >= 0)
            ::close(rfd_);
        if (child_ > 0) {
            // Closing stdin asks the child to exit; give it a moment.
            for (int i = 0; i < 50; ++i) {
                if (::waitpid(child_, nullptr, WNOHANG) == child_)
                    return;
                std::this_thread::sleep_for(std::chrono::milliseconds(10));
            }
            ::kill(child_, SIGKILL);
            ::waitpid(child_, nullptr, 0);
        }
    }
    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;

    std::string exchange(const std::string& line, std::chrono::milliseconds timeout) {
        const auto deadline = Clock::now() + timeout;
        std::string out = line;
        out += '\n';
        std::size_t sent = 0;
        while (sent < out.size()) {
            wait_for(wfd_, POLLOUT, deadline);
            const ssize_t n = ::write(wfd_, out.data() + sent, out.size() - sent);
            if (n < 0) {
                if (errno == EINTR || errno == EAGAIN)
                    continue;
                throw QueryFailure(std::string("write failed: ") + std::strerror(errno));
            }
            sent += static_cast<std::size_t>(n);
        }
        for (;;) {
            const auto nl = buffer_.find('\n');
            if (nl != std::string::npos) {
                std::string reply = buffer_.substr(0, nl);
                buffer_.erase(0, nl + 1);
                return reply;
            }
            wait_for(rfd_, POLLIN, deadline);
            char chunk[65536];
            const ssize_t n = ::read(rfd_, chunk, sizeof chunk);
            if (n < 0) {
                if (errno == EINTR || errno == EAGAIN)
                    continue;
                throw QueryFailure(std::string("read failed: ") + std::strerror(errno));
            }
            if (n == 0)
                throw QueryFailure("model closed the connection");
            buffer_.append(chunk, static_cast<std::size_t>(n));
        }
    }

private:
    static void wait_for(int fd, short events, Clock::time_point deadline) {
        for (;;) {
            const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
            if (left.count() <= 0)
                throw QueryFailure("request timed out");
            pollfd p{fd, events, 0};
            const int r = ::poll(&p, 1, static_cast<int>(std::min<long long>(left.count(), 1 << 30)));
            if (r > 0)
                return;
            if (r < 0 && errno != EINTR)
                throw QueryFailure(std::string("poll failed: ") + std::strerror(errno));
        }
    }

    int rfd_;
    int wfd_;
    pid_t child_;
    std::string buffer_;
};

namespace {

std::unique_ptr<Session> spawn(const std::string& command) {
    int to_child[2], from_child[2];
    if (::pipe(to_child) != 0)
        throw QueryFailure("pipe failed");
    if (::pipe(from_child) != 0) {
        ::close(to_child[0]);
        ::close(to_child[1]);
        throw QueryFailure("pipe failed");
    }
    const pid_t pid = ::fork();
    if (pid < 0)
        throw QueryFailure("fork failed");
    if (pid == 0) {
        ::dup2(to_child[0], STDIN_FILENO);
        ::dup2(from_child[1], STDOUT_FILENO);
        ::close(to_child[0]);
        ::close(to_child[1]);
        ::close(from_child[0]);
        ::close(from_child[1]);
        ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    ::fcntl(to_child[1], F_SETFD, FD_CLOEXEC);
    ::fcntl(from_child[0], F_SETFD, FD_CLOEXEC);
    return std::make_unique<Session>(from_child[0], to_child[1], pid);
}

std::unique_ptr<Session> connect_unix(const std::string& path) {
    const int fd = ::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd < 0)
        throw QueryFailure("socket failed");
    sockaddr_un addr{};
    addr.sun_family = AF_UNIX;
    if (path.size() >= sizeof addr.sun_path) {
        ::close(fd);
        throw QueryFailure("unix socket path too long");
    }
    std::memcpy(addr.sun_path, path.c_str(), path.size() + 1);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        ::close(fd);
        throw QueryFailure("cannot connect to unix:" + path + ": " + std::strerror(errno));
    }
    return std::make_unique<Session>(fd, fd, 0);
}

std::unique_ptr<Session> connect_tcp(const std::string& host, int port) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 || !res)
        throw QueryFailure("cannot resolve " + host);
    int fd = -1;
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
        fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
        if (fd < 0)
            continue;
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0)
            break;
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0)
        throw QueryFailure("cannot connect to tcp:" + host + ":" + std::to_string(port));
    return std::make_unique<Session>(fd, fd, 0);
}

json tokens_json(TokenSpan tokens) {
    json arr = json::array();
    for (TokenId t : tokens)
        arr.push_back(static_cast<int>(t));
    return arr;
}

json parse_reply(const std::string& reply) {
    json j;
    try {
        j = json::parse(reply);
    } catch (const json::exception& e) {
        throw QueryFailure(std::string("malformed response: ") + e.what());
    }
    if (!j.is_object())
        throw QueryFailure("response is not an object");
    if (j.contains("error"))
        throw QueryFailure("model error: " + j["error"].dump());
    return j;
}

std::vector<double> number_list(const json& j, const char* what) {
    if (!j.is_array())
        throw QueryFailure(std::string(what) + " is not an array");
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& v : j) {
        if (!v.is_number())
            throw QueryFailure(std::string(what) + " holds a non-number");
        out.push_back(v.get<double>());
    }
    return out;
}

}  // namespace

class ProtocolModel::Lease {
public:
    explicit Lease(ProtocolModel& owner) : owner_(owner) {
        std::unique_lock lock(owner_.mu_);
        owner_.cv_.wait(lock, [&] { return !owner_.idle_.empty() || owner_.open_ < owner_.max_sessions_; });
        if (!owner_.idle_.empty()) {
            session_ = std::move(owner_.idle_.back());
            owner_.idle_.pop_back();
            return;
        }
        ++owner_.open_;
        lock.unlock();
        try {
            session_ = owner_.open_session();
        } catch (...) {
            release(false);
            throw;
        }
    }
    ~Lease() { release(healthy_); }
    Session& session() { return *session_; }
    void mark_broken() { healthy_ = false; }

private:
    void release(bool keep) {
        std::lock_guard lock(owner_.mu_);
        if (keep && session_) {
            owner_.idle_.push_back(std::move(session_));
        } else {
            session_.reset();
            --owner_.open_;
        }
        owner_.cv_.notify_one();
    }

    ProtocolModel& owner_;
    std::unique_ptr<Session> session_;
    bool healthy_ = true;
};

ProtocolModel::ProtocolModel(Endpoint endpoint, std::chrono::milliseconds timeout, int sessions)
    : endpoint_(std::move(endpoint)), timeout_(timeout), max_sessions_(std::max(1, sessions)) {
    static std::once_flag sigpipe;
    std::call_once(sigpipe, [] { ::signal(SIGPIPE, SIG_IGN); });

    const json info = parse_reply(exchange(R"({"op":"info"})"));
    if (!info.contains("vocab") || !info["vocab"].is_number_integer())
        throw QueryFailure("info response lacks vocab");
    vocab_ = info["vocab"].get<int>();
    if (vocab_ != static_cast<int>(kVocabSize))
        throw QueryFailure("model vocabulary is " + std::to_string(vocab_) + ", expected 71");
    max_ctx_ = info.value("max_ctx", 0);
    caps_ = Capabilities{false, false, false, false};
    for (const auto& c : info.value("caps", json::array())) {
        const std::string cap = c.is_string() ? c.get<std::string>() : "";
        caps_.dist |= cap == "dist";
        caps_.dist_batch |= cap == "dist_batch";
        caps_.probe |= cap == "probe";
        caps_.grad_cos |= cap == "grad_cos";
    }
    if (!caps_.dist)
        throw QueryFailure("model does not offer dist");
}

ProtocolModel::~ProtocolModel() = default;

std::unique_ptr<Session> ProtocolModel::open_session() const {
    switch (endpoint_.kind) {
    case Endpoint::Kind::Exec: return spawn(endpoint_.target);
    case Endpoint::Kind::Unix: return connect_unix(endpoint_.target);
    case Endpoint::Kind::Tcp: return connect_tcp(endpoint_.target, endpoint_.port);
    }
    throw QueryFailure("bad endpoint");
}

std::string ProtocolModel::exchange(const std::string& line) {
    Lease lease(*this);
    try {
        return lease.session().exchange(line, timeout_);
    } catch (...) {
        // A late reply would desynchronize the stream, so the session goes.
        lease.mark_broken();
        throw;
    }
}

std::string ProtocolModel::raw_request(const std::string& line) { return exchange(line); }

void ProtocolModel::check_context(TokenSpan tokens) const {
    if (max_ctx_ > 0 && tokens.size() > static_cast<std::size_t>(max_ctx_))
        throw QueryFailure("prefix of " + std::to_string(tokens.size()) + " tokens exceeds max_ctx " +
                           std::to_string(max_ctx_));
}

ModelDistribution ProtocolModel::dist(TokenSpan tokens) {
    check_context(tokens);
    const json req{{"op", "dist"}, {"tokens", tokens_json(tokens)}};
    const json reply = parse_reply(exchange(req.dump()));
    if (!reply.contains("probs"))
        throw QueryFailure("dist response lacks probs");
    return ModelDistribution::from_raw(number_list(reply["probs"], "probs"));
}

std::vector<ModelDistribution> ProtocolModel::dist_batch(std::span<const TokenSequence> seqs) {
    if (!caps_.dist_batch)
        return Model::dist_batch(seqs);
    std::vector<ModelDistribution> out;
    if (seqs.empty())
        return out;
    json arr = json::array();
    for (const auto& s : seqs) {
        check_context(s);
        arr.push_back(tokens_json(s));
    }
    const json req{{"op", "dist_batch"}, {"seqs", std::move(arr)}};
    const json reply = parse_reply(exchange(req.dump()));
    if (!reply.contains("probs") || !reply["probs"].is_array() || reply["probs"].size() != seqs.size())
        throw QueryFailure("dist_batch response has the wrong shape");
    out.reserve(seqs.size());
    for (const auto& row : reply["probs"])
        out.push_back(ModelDistribution::from_raw(number_list(row, "probs")));
    return out;
}

ProbeBoard ProtocolModel::probe(TokenSpan tokens) {
    if (!caps_.probe)
        throw CapabilityMissing(name() + ": no probe head");
    check_context(tokens);
    const json req{{"op", "probe"}, {"tokens", tokens_json(tokens)}};
    const json reply = parse_reply(exchange(req.dump()));
    if (!reply.contains("board") || !reply["board"].is_array())
        throw QueryFailure("probe response lacks board");
    std::vector<std::vector<double>> raw;
    for (const auto& sq : reply["board"])
        raw.push_back(number_list(sq, "board"));
    return ProbeBoard::from_raw(raw);
}

double ProtocolModel::grad_cos(TokenSpan tokens) {
    if (!caps_.grad_cos)
        throw CapabilityMissing(name() + ": grad_cos not offered");
    check_context(tokens);
    const json req{{"op", "grad_cos"}, {"tokens", tokens_json(tokens)}};
    const json reply = parse_reply(exchange(req.dump()));
    if (!reply.contains("cos_dist") || !reply["cos_dist"].is_number())
        throw QueryFailure("grad_cos response lacks cos_dist");
    const double x = reply["cos_dist"].get<double>();
    if (!std::isfinite(x))
        throw QueryFailure("cos_dist is not finite");
    return x;
}

// ── Server side ─────────────────────────────────────────────────────────────

namespace {

TokenSequence parse_tokens(const json& j) {
    if (!j.is_array())
        throw std::invalid_argument("tokens must be an array");
    TokenSequence out;
    out.reserve(j.size());
    for (const auto& v : j) {
        if (!v.is_number_integer())
            throw std::invalid_argument("token ids must be integers");
        const auto id = v.get<long long>();
        if (id < 0 || id >= static_cast<long long>(kVocabSize))
            throw std::invalid_argument("token id " + std::to_string(id) + " out of range");
        out.push_back(static_cast<TokenId>(id));
    }
    return out;
}

json probs_json(const ModelDistribution& d) { return json(std::vector<double>(d.probs.begin(), d.probs.end())); }

json handle(Model& model, const json& req, int max_ctx) {
    if (!req.is_object() || !req.contains("op") || !req["op"].is_string())
        throw std::invalid_argument("request needs a string op");
    const std::string op = req["op"].get<std::string>();
    const Capabilities caps = model.capabilities();
    auto checked = [&](const json& tokens) {
        TokenSequence t = parse_tokens(tokens);
        if (max_ctx > 0 && t.size() > static_cast<std::size_t>(max_ctx))
            throw std::invalid_argument("sequence longer than max_ctx");
        return t;
    };
    if (op == "info") {
        json cap_list = json::array();
        if (caps.dist) cap_list.push_back("dist");
        if (caps.dist_batch) cap_list.push_back("dist_batch");
        if (caps.probe) cap_list.push_back("probe");
        if (caps.grad_cos) cap_list.push_back("grad_cos");
        return {{"vocab", kVocabSize}, {"caps", cap_list}, {"max_ctx", max_ctx}};
    }
    if (op == "dist")
        return {{"probs", probs_json(model.dist(checked(req.at("tokens"))))}};
    if (op == "dist_batch") {
        const json& seqs = req.at("seqs");
        if (!seqs.is_array())
            throw std::invalid_argument("seqs must be an array");
        std::vector<TokenSequence> batch;
        for (const auto& s : seqs)
            batch.push_back(checked(s));
        json rows = json::array();
        for (const auto& d : model.dist_batch(batch))
            rows.push_back(probs_json(d));
        return {{"probs", rows}};
    }
    if (op == "probe") {
        if (!caps.probe)
            throw std::invalid_argument("probe capability not offered");
        const ProbeBoard pb = model.probe(checked(req.at("tokens")));
        json board = json::array();
        for (const auto& sq : pb.probs)
            board.push_back(std::vector<double>(sq.begin(), sq.end()));
        return {{"board", board}};
    }
    if (op == "grad_cos") {
        if (!caps.grad_cos)
            throw std::invalid_argument("grad_cos capability not offered");
        return {{"cos_dist", model.grad_cos(checked(req.at("tokens")))}};
    }
    throw std::invalid_argument("unknown op '" + op + "'");
}

}  // namespace

std::string handle_request_line(Model& model, std::string_view line, int max_ctx) {
    try {
        return handle(model, json::parse(line), max_ctx).dump();
    } catch (const std::exception& e) {
        return json{{"error", e.what()}}.dump();
    }
}

void serve_stream(Model& model, std::istream& in, std::ostream& out, int max_ctx) {
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        out << handle_request_line(model, line, max_ctx) << '\n';
        out.flush();
    }
}

namespace {

void serve_connection(Model& model, int fd, const std::atomic<bool>& stop, int max_ctx) {
    std::string buffer;
    char chunk[65536];
    while (!stop.load()) {
        pollfd p{fd, POLLIN, 0};
        const int r = ::poll(&p, 1, 100);
        if (r == 0)
            continue;
        if (r < 0 && errno == EINTR)
            continue;
        const ssize_t n = r > 0 ? ::read(fd, chunk, sizeof chunk) : -1;
        if (n <= 0)
            break;
        buffer.append(chunk, static_cast<std::size_t>(n));
        for (auto nl = buffer.find('\n'); nl != std::string::npos; nl = buffer.find('\n')) {
            std::string line = buffer.substr(0, nl);
            buffer.erase(0, nl + 1);
            if (!line.empty() && line.back() == '\r')
                line.pop_back();
            if (line.empty())
                continue;
            const std::string reply = handle_request_line(model, line, max_ctx) + '\n';
            std::size_t sent = 0;
            while (sent < reply.size()) {
                const ssize_t w = ::send(fd, reply.data() + sent, reply.size() - sent, MSG_NOSIGNAL);
                if (w <= 0) {
                    ::close(fd);
                    return;
                }
                sent += static_cast<std::size_t>(w);
            }
        }
    }
    ::close(fd);
}

}  // namespace

void serve_endpoint(Model& model, const Endpoint& endpoint, const std::atomic<bool>& stop,
                    const std::function<void(int)>& on_ready, int max_ctx) {
    int fd = -1;
    int bound_port = 0;
    if (endpoint.kind == Endpoint::Kind::Unix) {
        fd = ::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0);
        sockaddr_un addr{};
        addr.sun_family = AF_UNIX;
        if (endpoint.target.size() >= sizeof addr.sun_path)
            throw std::runtime_error("unix socket path too long");
        std::memcpy(addr.sun_path, endpoint.target.c_str(), endpoint.target.size() + 1);
        ::unlink(endpoint.target.c_str());
        if (fd < 0 || ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
            throw std::runtime_error("cannot bind " + endpoint.str() + ": " + std::strerror(errno));
    } else if (endpoint.kind == Endpoint::Kind::Tcp) {
        fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
        const int one = 1;
        ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(static_cast<std::uint16_t>(endpoint.port));
        const std::string host = endpoint.target == "localhost" ? "127.0.0.1" : endpoint.target;
        if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
            throw std::runtime_error("serve needs a numeric IPv4 host, got " + endpoint.target);
        if (fd < 0 || ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
            throw std::runtime_error("cannot bind " + endpoint.str() + ": " + std::strerror(errno));
        socklen_t len = sizeof addr;
        ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
        bound_port = ntohs(addr.sin_port);
    } else {
        throw std::runtime_error("serve_endpoint needs a tcp or unix endpoint");
    }
    if (::listen(fd, 16) != 0) {
        ::close(fd);
        throw std::runtime_error("listen failed: " + std::string(std::strerror(errno)));
    }
    if (on_ready)
        on_ready(bound_port);

    std::vector<std::thread> workers;
    while (!stop.load()) {
        pollfd p{fd, POLLIN, 0};
        if (::poll(&p, 1, 100) <= 0)
            continue;
        const int client = ::accept4(fd, nullptr, nullptr, SOCK_CLOEXEC);
        if (client < 0)
            continue;
        workers.emplace_back(serve_connection, std::ref(model), client, std::cref(stop), max_ctx);
    }
    ::close(fd);
    for (auto& w : workers)
        w.join();
    if (endpoint.kind == Endpoint::Kind::Unix)
        ::unlink(endpoint.target.c_str());
}

// ── Conformance ─────────────────────────────────────────────────────────────

std::vector<ConformanceCheck> run_conformance(ProtocolModel& model) {
    std::vector<ConformanceCheck> out;
    auto check = [&](std::string name, auto&& body) {
        ConformanceCheck c{std::move(name), false, ""};
        try {
            c.detail = body();
            c.passed = c.detail.empty();
        } catch (const std::exception& e) {
            c.detail = e.what();
        }
        out.push_back(std::move(c));
    };

    const TokenSequence bos{kBos};
    const TokenSequence e2e4{kBos, 15, 31};
    const TokenSequence mid{kBos, 15};

    check("info", [&]() -> std::string {
        if (model.vocab() != static_cast<int>(kVocabSize))
            return "vocab " + std::to_string(model.vocab());
        return model.max_ctx() > 0 ? "" : "max_ctx missing or not positive";
    });
    check("dist normalized", [&]() -> std::string {
        for (const auto* seq : {&bos, &e2e4, &mid})
            (void)model.dist(*seq);
        return "";
    });
    if (model.capabilities().dist_batch) {
        check("dist_batch order", [&]() -> std::string {
            const std::vector<TokenSequence> seqs{e2e4, bos, mid};
            const auto batch = model.dist_batch(seqs);
            if (batch.size() != seqs.size())
                return "wrong row count";
            for (std::size_t i = 0; i < seqs.size(); ++i) {
                const auto single = model.dist(seqs[i]);
                for (std::size_t t = 0; t < kVocabSize; ++t)
                    if (std::abs(single.probs[t] - batch[i].probs[t]) > 1e-6)
                        return "row " + std::to_string(i) + " differs from dist";
            }
            return "";
        });
    }
    if (model.capabilities().probe)
        check("probe shape", [&]() -> std::string {
            (void)model.probe(e2e4);
            return "";
        });
    if (model.capabilities().grad_cos)
        check("grad_cos range", [&]() -> std::string {
            const double x = model.grad_cos(e2e4);
            return x >= 0.0 && x <= 2.0 ? "" : "cos_dist " + std::to_string(x) + " outside [0, 2]";
        });
    check("malformed request", [&]() -> std::string {
        const json reply = json::parse(model.raw_request("{not json"));
        if (!reply.is_object() || !reply.contains("error"))
            return "no error record";
        const json unknown = json::parse(model.raw_request(R"({"op":"no_such_op"})"));
        if (!unknown.contains("error"))
            return "unknown op accepted";
        const json range = json::parse(model.raw_request(R"({"op":"dist","tokens":[1,99]})"));
        if (!range.contains("error"))
            return "out-of-range token accepted";
        (void)model.dist(bos);
        return "";
    });
    return out;
}

}  // namespace soundcheck
