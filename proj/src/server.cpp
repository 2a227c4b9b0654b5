#include <sys/socket.h>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <chrono>
#include <deque>
#include <list>
#include <set>
#include <thread>

#include "fractalforge/service.hpp"

namespace ff {

namespace {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

constexpr size_t kMaxQueuedFrames = 3;

// Open connection sockets, shut down on server stop to unblock their threads.
class SocketRegistry {
public:
    void add(int fd) {
        std::lock_guard lock(mutex_);
        fds_.insert(fd);
    }
    void remove(int fd) {
        std::lock_guard lock(mutex_);
        fds_.erase(fd);
    }
    void shutdown_all() {
        std::lock_guard lock(mutex_);
        for (const int fd : fds_) ::shutdown(fd, SHUT_RDWR);
    }

private:
    std::mutex mutex_;
    std::set<int> fds_;
};

void serve_preview(RenderService& service, net::io_context& ioc, tcp::socket& socket,
                   const http::request<http::string_body>& upgrade, const std::atomic<bool>& stop) {
    websocket::stream<tcp::socket&> ws(socket);
    websocket::stream_base::timeout timeouts = websocket::stream_base::timeout::suggested(beast::role_type::server);
    timeouts.handshake_timeout = std::chrono::seconds(2);
    ws.set_option(timeouts);
    ws.binary(true);
    ws.accept(upgrade);

    std::atomic<bool> closed{false};
    std::atomic<size_t> pending{0};
    std::deque<std::shared_ptr<std::string>> queue;  // touched on the io thread only
    bool writing = false;

    std::function<void()> write_next = [&] {
        if (queue.empty() || closed) {
            writing = false;
            return;
        }
        writing = true;
        auto msg = queue.front();
        ws.async_write(net::buffer(*msg), [&, msg](beast::error_code ec, size_t) {
            queue.pop_front();
            --pending;
            if (ec) {
                closed = true;
                service.notify_all();
            }
            write_next();
        });
    };

    // Client messages are ignored; the read loop only detects disconnects.
    beast::flat_buffer incoming;
    std::function<void(beast::error_code, size_t)> on_read = [&](beast::error_code ec, size_t n) {
        if (ec) {
            closed = true;
            service.notify_all();
            return;
        }
        incoming.consume(n);
        ws.async_read(incoming, on_read);
    };
    ws.async_read(incoming, on_read);

    auto work = net::make_work_guard(ioc);
    std::thread producer([&] {
        service.stream_previews(
            [&](const PreviewFrame& frame) {
                while (pending >= kMaxQueuedFrames && !closed && !stop) std::this_thread::sleep_for(std::chrono::milliseconds(5));
                if (closed || stop) return false;
                auto msg = std::make_shared<std::string>(encode_preview_message(frame));
                ++pending;
                net::post(ioc, [&, msg] {
                    queue.push_back(msg);
                    if (!writing) write_next();
                });
                return true;
            },
            [&] { return closed.load() || stop.load(); });
        net::post(ioc, [&] {
            work.reset();
            if (!closed) ws.async_close(websocket::close_code::normal, [](beast::error_code) {});
        });
    });
    ioc.run();
    producer.join();
}

HttpRequest to_request(const http::request<http::string_body>& req) {
    return {std::string(req.method_string()), std::string(req.target()), req.body()};
}

void serve_connection(RenderService& service, net::io_context& ioc, tcp::socket& socket, const std::atomic<bool>& stop) {
    beast::flat_buffer buffer;
    beast::error_code ec;
    while (!stop) {
        http::request<http::string_body> req;
        http::read(socket, buffer, req, ec);
        if (ec) break;
        if (websocket::is_upgrade(req)) {
            if (req.target() == "/preview") {
                try {
                    serve_preview(service, ioc, socket, req, stop);
                } catch (const std::exception&) {
                }
                return;
            }
            http::response<http::string_body> res{http::status::not_found, req.version()};
            res.set(http::field::content_type, "application/json");
            res.body() = "{\"error\":\"no websocket endpoint here\"}\n";
            res.prepare_payload();
            http::write(socket, res, ec);
            break;
        }
        const HttpResponse out = service.handle(to_request(req));
        http::response<http::string_body> res{static_cast<http::status>(out.status), req.version()};
        res.set(http::field::server, "fractalforge");
        res.set(http::field::content_type, out.content_type);
        res.keep_alive(req.keep_alive());
        res.body() = out.body;
        res.prepare_payload();
        http::write(socket, res, ec);
        if (ec || !req.keep_alive()) break;
    }
    socket.shutdown(tcp::socket::shutdown_both, ec);
}

}  // namespace

void run_server(RenderService& service, unsigned short port, const std::atomic<bool>& stop,
                const std::function<void(unsigned short)>& on_listening) {
    net::io_context accept_ctx;
    tcp::acceptor acceptor(accept_ctx, tcp::endpoint(net::ip::make_address("127.0.0.1"), port));
    acceptor.non_blocking(true);
    if (on_listening) on_listening(acceptor.local_endpoint().port());

    struct Worker {
        std::thread thread;
        std::shared_ptr<std::atomic<bool>> done;
    };
    SocketRegistry registry;
    std::list<Worker> workers;
    while (!stop) {
        workers.remove_if([](Worker& w) {
            if (!*w.done) return false;
            w.thread.join();
            return true;
        });
        auto ioc = std::make_shared<net::io_context>();
        beast::error_code ec;
        tcp::socket socket = acceptor.accept(*ioc, ec);
        if (ec == net::error::would_block || ec == net::error::try_again) {
            std::this_thread::sleep_for(std::chrono::milliseconds(20));
            continue;
        }
        if (ec) continue;
        socket.non_blocking(false);
        socket.set_option(tcp::no_delay(true));
        const int fd = socket.native_handle();
        registry.add(fd);
        auto done = std::make_shared<std::atomic<bool>>(false);
        std::thread t([&service, &stop, &registry, ioc, fd, done, s = std::move(socket)]() mutable {
            try {
                serve_connection(service, *ioc, s, stop);
            } catch (const std::exception&) {
            }
            registry.remove(fd);  // before the socket closes, so the descriptor cannot be reused meanwhile
            *done = true;
        });
        workers.push_back({std::move(t), done});
    }
    registry.shutdown_all();
    service.notify_all();
    for (auto& w : workers) w.thread.join();
}

}  // namespace ff
