#include "msek/channel.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <cstring>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

namespace msek {

namespace {

std::string sys_error(const char* what)
{
    return std::string(what) + ": " + std::strerror(errno);
}

bool send_all(int fd, std::string_view data)
{
    while (!data.empty()) {
        const ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR)
                continue;
            return false;
        }
        data.remove_prefix(static_cast<std::size_t>(n));
    }
    return true;
}

} // namespace

TcpLineChannel::TcpLineChannel(const std::string& host, int port, std::chrono::milliseconds timeout)
    : timeout_(timeout)
{
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const auto service = std::to_string(port);
    if (int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0)
        throw Error(Errc::ConnectionLost, "resolve " + host + ": " + ::gai_strerror(rc));
    for (auto* p = res; p; p = p->ai_next) {
        fd_ = ::socket(p->ai_family, p->ai_socktype, p->ai_protocol);
        if (fd_ < 0)
            continue;
        if (::connect(fd_, p->ai_addr, p->ai_addrlen) == 0)
            break;
        ::close(fd_);
        fd_ = -1;
    }
    ::freeaddrinfo(res);
    if (fd_ < 0)
        throw Error(Errc::ConnectionLost, "cannot connect to " + host + ":" + service);
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

TcpLineChannel::~TcpLineChannel()
{
    if (fd_ >= 0)
        ::close(fd_);
}

std::string TcpLineChannel::request(std::string_view line)
{
    std::string out(line);
    out += '\n';
    if (!send_all(fd_, out))
        throw Error(Errc::ConnectionLost, sys_error("send"));

    const auto deadline = std::chrono::steady_clock::now() + timeout_;
    for (;;) {
        if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
            std::string reply = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            if (!reply.empty() && reply.back() == '\r')
                reply.pop_back();
            return reply;
        }
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
            deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0)
            throw Error(Errc::ChannelTimeout, "no reply to '" + std::string(line) + "'");
        pollfd pfd{fd_, POLLIN, 0};
        const int rc = ::poll(&pfd, 1, static_cast<int>(left.count()));
        if (rc < 0 && errno != EINTR)
            throw Error(Errc::ConnectionLost, sys_error("poll"));
        if (rc <= 0)
            continue;
        char buf[4096];
        const ssize_t n = ::recv(fd_, buf, sizeof buf, 0);
        if (n == 0)
            throw Error(Errc::ConnectionLost, "peer closed the connection");
        if (n < 0) {
            if (errno == EINTR)
                continue;
            throw Error(Errc::ConnectionLost, sys_error("recv"));
        }
        buffer_.append(buf, static_cast<std::size_t>(n));
    }
}

LineServer::LineServer(int port, bool any_address)
{
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0)
        throw Error(Errc::IoError, sys_error("socket"));
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    addr.sin_addr.s_addr = htonl(any_address ? INADDR_ANY : INADDR_LOOPBACK);
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        const auto msg = sys_error("bind");
        ::close(listen_fd_);
        throw Error(Errc::IoError, msg);
    }
    if (::listen(listen_fd_, 4) != 0) {
        const auto msg = sys_error("listen");
        ::close(listen_fd_);
        throw Error(Errc::IoError, msg);
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
}

LineServer::~LineServer()
{
    if (listen_fd_ >= 0)
        ::close(listen_fd_);
}

int LineServer::serve(const Handler& handler)
{
    constexpr int tick_ms = 50;
    int served = 0;
    while (!stop_.load()) {
        pollfd lp{listen_fd_, POLLIN, 0};
        if (::poll(&lp, 1, tick_ms) <= 0)
            continue;
        const int client = ::accept(listen_fd_, nullptr, nullptr);
        if (client < 0)
            continue;
        int one = 1;
        ::setsockopt(client, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        ++served;

        std::string buffer;
        bool open = true;
        while (open && !stop_.load()) {
            pollfd cp{client, POLLIN, 0};
            const int rc = ::poll(&cp, 1, tick_ms);
            if (rc <= 0)
                continue;
            char buf[4096];
            const ssize_t n = ::recv(client, buf, sizeof buf, 0);
            if (n <= 0) {
                if (n < 0 && errno == EINTR)
                    continue;
                break;
            }
            buffer.append(buf, static_cast<std::size_t>(n));
            std::size_t nl;
            while ((nl = buffer.find('\n')) != std::string::npos) {
                std::string line = buffer.substr(0, nl);
                buffer.erase(0, nl + 1);
                if (!line.empty() && line.back() == '\r')
                    line.pop_back();
                std::string reply = handler(line);
                reply += '\n';
                if (!send_all(client, reply)) {
                    open = false;
                    break;
                }
            }
        }
        ::close(client);
    }
    return served;
}

} // namespace msek
