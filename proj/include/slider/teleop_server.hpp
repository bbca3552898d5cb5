#pragma once

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <thread>

#include "slider/teleop_loop.hpp"

namespace slider {

/**
 * @brief WebSocket transport for the teleoperation protocol.
 *
 * Every text message from a client is split into lines and handed to the
 * inbound callback. deliver() may be called from any thread; writes are
 * serialized on the server's I/O thread. A session whose outbound queue grows
 * past kMaxQueued drops its oldest messages.
 */
class TeleopServer {
public:
    using InboundHandler = std::function<void(Inbound)>;
    static constexpr std::size_t kMaxQueued = 256;

    TeleopServer(InboundHandler inbound, const std::string& address, unsigned short port)
        : inbound_(std::move(inbound)), acceptor_(ioc_) {
        namespace net = boost::asio;
        const net::ip::tcp::endpoint endpoint(net::ip::make_address(address), port);
        acceptor_.open(endpoint.protocol());
        acceptor_.set_option(net::socket_base::reuse_address(true));
        acceptor_.bind(endpoint);
        acceptor_.listen(net::socket_base::max_listen_connections);
    }

    ~TeleopServer() { stop(); }

    TeleopServer(const TeleopServer&) = delete;
    TeleopServer& operator=(const TeleopServer&) = delete;

    unsigned short port() const { return acceptor_.local_endpoint().port(); }

    void start() {
        do_accept();
        thread_ = std::thread([this] { ioc_.run(); });
    }

    void stop() {
        if (!thread_.joinable()) return;
        boost::asio::post(ioc_, [this] {
            boost::system::error_code ignored;
            acceptor_.close(ignored);
            for (auto& [id, weak] : sessions_)
                if (auto s = weak.lock()) s->close();
            ioc_.stop();
        });
        thread_.join();
    }

    /// Thread-safe.
    void deliver(Outbound out) {
        boost::asio::post(ioc_, [this, out = std::move(out)] {
            auto text = std::make_shared<const std::string>(out.text);
            if (out.target == Outbound::kBroadcast) {
                for (auto& [id, weak] : sessions_)
                    if (auto s = weak.lock()) s->send(text);
            } else if (auto it = sessions_.find(out.target); it != sessions_.end()) {
                if (auto s = it->second.lock()) s->send(text);
            }
        });
    }

private:
    class Session : public std::enable_shared_from_this<Session> {
    public:
        Session(TeleopServer& server, SessionId id, boost::asio::ip::tcp::socket socket)
            : server_(server), id_(id), ws_(std::move(socket)) {}

        void run() {
            ws_.set_option(boost::beast::websocket::stream_base::timeout::suggested(boost::beast::role_type::server));
            ws_.async_accept([self = shared_from_this()](boost::beast::error_code ec) {
                if (ec) return self->closed();
                self->server_.sessions_[self->id_] = self;
                self->do_read();
            });
        }

        void send(const std::shared_ptr<const std::string>& text) {
            if (closing_) return;
            if (queue_.size() >= kMaxQueued) queue_.pop_front();
            queue_.push_back(text);
            if (queue_.size() == 1) do_write();
        }

        void close() {
            closing_ = true;
            boost::beast::error_code ignored;
            boost::beast::get_lowest_layer(ws_).socket().close(ignored);
        }

    private:
        void do_read() {
            ws_.async_read(buffer_, [self = shared_from_this()](boost::beast::error_code ec, std::size_t) {
                if (ec) return self->closed();
                const std::string text = boost::beast::buffers_to_string(self->buffer_.data());
                self->buffer_.consume(self->buffer_.size());
                std::size_t begin = 0;
                while (begin <= text.size()) {
                    std::size_t end = text.find('\n', begin);
                    if (end == std::string::npos) end = text.size();
                    std::string line = text.substr(begin, end - begin);
                    if (!line.empty() && line.back() == '\r') line.pop_back();
                    if (!line.empty()) self->server_.inbound_(InboundLine{self->id_, std::move(line)});
                    begin = end + 1;
                }
                self->do_read();
            });
        }

        void do_write() {
            ws_.text(true);
            ws_.async_write(boost::asio::buffer(*queue_.front()),
                            [self = shared_from_this()](boost::beast::error_code ec, std::size_t) {
                                if (ec) return self->closed();
                                self->queue_.pop_front();
                                if (!self->queue_.empty()) self->do_write();
                            });
        }

        void closed() {
            if (reported_) return;
            reported_ = true;
            closing_ = true;
            server_.sessions_.erase(id_);
            server_.inbound_(SessionClosed{id_});
        }

        TeleopServer& server_;
        SessionId id_;
        boost::beast::websocket::stream<boost::beast::tcp_stream> ws_;
        boost::beast::flat_buffer buffer_;
        std::deque<std::shared_ptr<const std::string>> queue_;
        bool closing_ = false;
        bool reported_ = false;
    };

    void do_accept() {
        acceptor_.async_accept(boost::asio::make_strand(ioc_),
                               [this](boost::beast::error_code ec, boost::asio::ip::tcp::socket socket) {
                                   if (ec) return;  // acceptor closed
                                   std::make_shared<Session>(*this, next_id_++, std::move(socket))->run();
                                   do_accept();
                               });
    }

    InboundHandler inbound_;
    boost::asio::io_context ioc_{1};
    boost::asio::ip::tcp::acceptor acceptor_;
    std::map<SessionId, std::weak_ptr<Session>> sessions_;  // I/O thread only
    SessionId next_id_ = 1;
    std::thread thread_;
};

}  // namespace slider
