#pragma once

#include "msek/sim.hpp"

#include <atomic>
#include <chrono>
#include <functional>
#include <string>
#include <string_view>

namespace msek {

// A strictly serialized request/reply line transport to the managed system.
class LineChannel {
public:
    virtual ~LineChannel() = default;

    // Sends one command (no trailing newline) and returns the reply line
    // without its newline. Throws Errc::ChannelTimeout or Errc::ConnectionLost.
    virtual std::string request(std::string_view line) = 0;
};

// Talks to an embedded simulator through the same protocol handler the
// TCP service uses.
class InProcessChannel final : public LineChannel {
public:
    explicit InProcessChannel(sim::SimService& service) : service_(service) {}

    std::string request(std::string_view line) override { return service_.handle(line); }

private:
    sim::SimService& service_;
};

class TcpLineChannel final : public LineChannel {
public:
    TcpLineChannel(const std::string& host, int port,
                   std::chrono::milliseconds timeout = std::chrono::seconds(5));
    ~TcpLineChannel() override;

    TcpLineChannel(const TcpLineChannel&) = delete;
    TcpLineChannel& operator=(const TcpLineChannel&) = delete;

    std::string request(std::string_view line) override;

private:
    int fd_ = -1;
    std::chrono::milliseconds timeout_;
    std::string buffer_;
};

// Accept loop for the line protocol. Serves one client at a time; each
// received line is passed to `handler` and its result written back.
class LineServer {
public:
    using Handler = std::function<std::string(std::string_view)>;

    // Binds 127.0.0.1:port (0 picks an ephemeral port) or, with any_address,
    // every interface. Throws Errc::IoError.
    explicit LineServer(int port, bool any_address = false);
    ~LineServer();

    LineServer(const LineServer&) = delete;
    LineServer& operator=(const LineServer&) = delete;

    int port() const noexcept { return port_; }

    // Runs until stop() is called. Returns the number of clients served.
    int serve(const Handler& handler);
    void stop() noexcept { stop_.store(true); }

private:
    int listen_fd_ = -1;
    int port_ = 0;
    std::atomic<bool> stop_{false};
};

} // namespace msek
