#include "vosd/server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>

#include "vosd/wire.hpp"

namespace vosd {

using nlohmann::json;

namespace {

uint64_t u64_param(const json& p, const char* key) {
  if (!p.contains(key) || !p.at(key).is_number_unsigned())
    fail(Err::BadRequest, std::string("missing or invalid param: ") + key);
  return p.at(key).get<uint64_t>();
}

std::string str_param(const json& p, const char* key) {
  if (!p.contains(key) || !p.at(key).is_string())
    fail(Err::BadRequest, std::string("missing or invalid param: ") + key);
  return p.at(key).get<std::string>();
}

Bytes data_param(const json& p, const char* key = "data") {
  return wire::base64_decode(str_param(p, key));
}

std::optional<uint64_t> opt_u64_param(const json& p, const char* key) {
  if (!p.contains(key) || p.at(key).is_null()) return std::nullopt;
  return u64_param(p, key);
}

json ranges_to_json(const std::vector<ByteRange>& rs) {
  json out = json::array();
  for (const auto& r : rs)
    out.push_back(json{{"offset", r.offset}, {"length", r.length}});
  return out;
}

json stats_to_json(const StoreStats& s) {
  return json{{"chunk_count", s.chunk_count},
              {"stored_bytes", s.stored_bytes},
              {"bytes_copied_on_snapshot", s.bytes_copied_on_snapshot},
              {"bytes_written", s.bytes_written}};
}

json gc_to_json(const GcReport& r) {
  return json{{"versions_removed", r.versions_removed},
              {"chunks_freed", r.chunks_freed},
              {"bytes_freed", r.bytes_freed}};
}

}  // namespace

Server::Server(Store& store, TxnManager& txn, std::string host, int port,
               int max_in_flight)
    : store_(store),
      txn_(txn),
      host_(std::move(host)),
      port_(port),
      max_in_flight_(max_in_flight) {}

Server::~Server() { stop(); }

void Server::start() {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) fail(Err::BindFailure, "socket() failed");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<uint16_t>(port_));
  if (::inet_pton(AF_INET, host_.c_str(), &addr.sin_addr) != 1)
    fail(Err::BindFailure, "bad listen address: " + host_);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) !=
      0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
    fail(Err::BindFailure,
         "bind " + host_ + ":" + std::to_string(port_) + " failed");
  }
  if (::listen(listen_fd_, 64) != 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
    fail(Err::BindFailure, "listen failed");
  }
  if (port_ == 0) {
    sockaddr_in bound{};
    socklen_t len = sizeof(bound);
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.sin_port);
  }
  stopping_ = false;
  accept_thread_ = std::thread([this] { accept_loop(); });
}

void Server::stop() {
  if (listen_fd_ < 0) return;
  stopping_ = true;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  listen_fd_ = -1;
  if (accept_thread_.joinable()) accept_thread_.join();
  gate_cv_.notify_all();
  std::vector<std::thread> threads;
  {
    std::lock_guard lk(conn_mu_);
    // Unblock connection threads parked in recv().
    for (int fd : conn_fds_) ::shutdown(fd, SHUT_RDWR);
    threads.swap(conn_threads_);
  }
  for (auto& t : threads)
    if (t.joinable()) t.join();
}

void Server::accept_loop() {
  while (!stopping_) {
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (stopping_) break;
      continue;
    }
    std::lock_guard lk(conn_mu_);
    conn_fds_.insert(fd);
    conn_threads_.emplace_back([this, fd] { serve_connection(fd); });
  }
}

void Server::serve_connection(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  while (!stopping_) {
    // Backpressure: do not read the next frame while the store is at its
    // in-flight limit.
    {
      std::unique_lock lk(gate_mu_);
      gate_cv_.wait(lk, [this] {
        return in_flight_ < max_in_flight_ || stopping_.load();
      });
      if (stopping_) break;
      in_flight_ += 1;
    }
    json response;
    bool close_conn = false;
    try {
      auto request = wire::read_frame(fd);
      if (!request) {
        close_conn = true;
      } else {
        response = handle(*request);
      }
    } catch (const VosdError& e) {
      if (e.code() == Err::ConnectionClosed || e.code() == Err::Timeout) {
        close_conn = true;
      } else {
        // Malformed frames get an error response; the connection stays up.
        response = json{{"id", 0},
                        {"err", {{"code", e.code_name()},
                                 {"detail", e.what()}}}};
      }
    }
    {
      std::lock_guard lk(gate_mu_);
      in_flight_ -= 1;
    }
    gate_cv_.notify_one();
    if (close_conn) break;
    try {
      wire::write_frame(fd, response);
    } catch (const VosdError&) {
      break;
    }
  }
  {
    std::lock_guard lk(conn_mu_);
    conn_fds_.erase(fd);
  }
  ::close(fd);
}

json Server::handle(const json& request) {
  uint64_t id = 0;
  try {
    if (!request.is_object())
      fail(Err::BadRequest, "request is not a JSON object");
    if (request.contains("id") && request.at("id").is_number_unsigned())
      id = request.at("id").get<uint64_t>();
    std::string op = str_param(request, "op");
    json params = request.value("params", json::object());
    json ok = dispatch(op, params);
    return json{{"id", id}, {"ok", ok}};
  } catch (const VosdError& e) {
    return json{
        {"id", id},
        {"err", {{"code", e.code_name()}, {"detail", e.what()}}}};
  } catch (const std::exception& e) {
    return json{{"id", id},
                {"err", {{"code", "bad_request"}, {"detail", e.what()}}}};
  }
}

json Server::dispatch(const std::string& op, const json& p) {
  if (op == "ping") return json::object();

  // Store surface --------------------------------------------------------
  if (op == "create_collection")
    return {{"cvid", store_.create_collection(str_param(p, "cid"))}};
  if (op == "create_object")
    return {{"vid", store_.create_object(str_param(p, "cid"),
                                         u64_param(p, "cvid"),
                                         str_param(p, "oid"), data_param(p))}};
  if (op == "get")
    return {{"data", wire::base64_encode(store_.get(
                str_param(p, "cid"), u64_param(p, "cvid"),
                str_param(p, "oid")))}};
  if (op == "get_range")
    return {{"data", wire::base64_encode(store_.get_range(
                str_param(p, "cid"), u64_param(p, "cvid"),
                str_param(p, "oid"), u64_param(p, "offset"),
                u64_param(p, "length")))}};
  if (op == "set") {
    store_.set(str_param(p, "cid"), u64_param(p, "cvid"), str_param(p, "oid"),
               data_param(p));
    return json::object();
  }
  if (op == "write_range") {
    store_.write_range(str_param(p, "cid"), u64_param(p, "cvid"),
                       str_param(p, "oid"), u64_param(p, "offset"),
                       data_param(p));
    return json::object();
  }
  if (op == "clone_object")
    return {{"vid", store_.clone_object(str_param(p, "cid"),
                                        u64_param(p, "cvid"),
                                        str_param(p, "oid"))}};
  if (op == "clone_collection")
    return {{"cvid", store_.clone_collection(str_param(p, "cid"),
                                             u64_param(p, "src_cvid"))}};
  if (op == "list_objects")
    return {{"objects",
             store_.list_objects(str_param(p, "cid"), u64_param(p, "cvid"))}};
  if (op == "version_of")
    return {{"vid", store_.version_of(str_param(p, "cid"),
                                      u64_param(p, "cvid"),
                                      str_param(p, "oid"))}};
  if (op == "get_version")
    return {{"data", wire::base64_encode(store_.get_version(
                str_param(p, "cid"), str_param(p, "oid"),
                u64_param(p, "vid")))}};
  if (op == "write_version_range") {
    store_.write_version_range(str_param(p, "cid"), str_param(p, "oid"),
                               u64_param(p, "vid"), u64_param(p, "offset"),
                               data_param(p));
    return json::object();
  }
  if (op == "clone_version")
    return {{"vid", store_.clone_version(str_param(p, "cid"),
                                         str_param(p, "oid"),
                                         u64_param(p, "vid"))}};
  if (op == "diff")
    return {{"ranges", ranges_to_json(store_.diff(
                str_param(p, "cid"), str_param(p, "oid"), u64_param(p, "v1"),
                u64_param(p, "v2")))}};
  if (op == "parent") {
    auto v = store_.parent(str_param(p, "cid"), str_param(p, "oid"),
                           u64_param(p, "vid"));
    return {{"parent", v ? json(*v) : json(nullptr)}};
  }
  if (op == "children")
    return {{"children", store_.children(str_param(p, "cid"),
                                         str_param(p, "oid"),
                                         u64_param(p, "vid"))}};
  if (op == "pointer_get")
    return {{"cvid",
             store_.pointer_get(str_param(p, "cid"), str_param(p, "name"))}};
  if (op == "pointer_cas")
    return {{"success",
             store_.pointer_cas(str_param(p, "cid"), str_param(p, "name"),
                                opt_u64_param(p, "expected"),
                                u64_param(p, "target"))}};
  if (op == "delete_version") {
    store_.delete_version(str_param(p, "cid"), str_param(p, "oid"),
                          u64_param(p, "vid"));
    return json::object();
  }
  if (op == "gc") return gc_to_json(store_.gc(str_param(p, "cid")));
  if (op == "stats") return stats_to_json(store_.stats());

  // Txn surface ----------------------------------------------------------
  if (op == "tx_begin")
    return {{"tx_id", txn_.tx_begin(str_param(p, "cid"))}};
  if (op == "tx_get")
    return {{"data", wire::base64_encode(txn_.tx_get(u64_param(p, "tx_id"),
                                                     str_param(p, "oid")))}};
  if (op == "tx_write") {
    txn_.tx_write(u64_param(p, "tx_id"), str_param(p, "oid"),
                  u64_param(p, "offset"), data_param(p));
    return json::object();
  }
  if (op == "tx_commit") {
    CommitOutcome out = txn_.tx_commit(u64_param(p, "tx_id"));
    return {{"committed", out.committed},
            {"new_hct", out.new_hct},
            {"conflicts", out.conflicts}};
  }
  if (op == "tx_abort") {
    txn_.tx_abort(u64_param(p, "tx_id"));
    return json::object();
  }
  if (op == "hct_get") return {{"cvid", txn_.hct_get(str_param(p, "cid"))}};
  if (op == "ckpt_begin")
    return {{"ckpt_id", txn_.ckpt_begin(str_param(p, "cid"))}};
  if (op == "ckpt_write") {
    txn_.ckpt_write(u64_param(p, "ckpt_id"), str_param(p, "oid"),
                    u64_param(p, "offset"), data_param(p));
    return json::object();
  }
  if (op == "ckpt_commit")
    return {{"cvid", txn_.ckpt_commit(u64_param(p, "ckpt_id"))}};
  if (op == "hrc_get") return {{"cvid", txn_.hrc_get(str_param(p, "cid"))}};
  if (op == "read_atomic_get")
    return {{"data", wire::base64_encode(txn_.read_atomic_get(
                str_param(p, "cid"), str_param(p, "oid")))}};
  if (op == "merge_checkpoints")
    return {{"cvid", txn_.merge_checkpoints(str_param(p, "cid"),
                                            u64_param(p, "from_cvid"),
                                            u64_param(p, "to_cvid"))}};
  if (op == "txn_gc") return gc_to_json(txn_.txn_gc(str_param(p, "cid")));

  fail(Err::UnknownOp, "unknown op: " + op);
}

}  // namespace vosd
