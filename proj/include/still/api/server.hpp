#pragma once

#include "still/app/stack.hpp"
#include "still/core/error.hpp"

#include <atomic>
#include <memory>
#include <string>
#include <thread>
#include <vector>

namespace httplib {
class Server;
}

namespace still::api {

enum class Access {
    anyone,
    // Employee, or anyone when the branch runs an unauthenticated kiosk.
    cashier,
    employee,
    admin,
};

std::string_view access_name(Access access);

struct Route {
    std::string method;
    std::string pattern; // ":name" segments are path parameters
    Access access;
};

// Every route the server answers. Nothing else is registered.
const std::vector<Route>& route_table();

// HTTP status for an error code.
int http_status(Errc code);

class Server {
public:
    explicit Server(app::Stack& stack);
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;
    ~Server();

    // Binds without serving; port 0 picks a free one. Returns the port.
    // Throws address_in_use.
    int bind(const std::string& host, int port);
    // Serves until stop(). Blocking.
    void listen();
    // bind + listen on a background thread.
    int start(const std::string& host, int port);
    void stop();
    int port() const { return port_; }

private:
    struct Handlers;
    app::Stack& stack_;
    std::unique_ptr<httplib::Server> http_;
    std::unique_ptr<Handlers> handlers_;
    std::thread thread_;
    std::atomic<bool> stopping_{false};
    int port_ = 0;
};

} // namespace still::api
