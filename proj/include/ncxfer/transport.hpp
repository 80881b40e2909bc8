#pragma once

#include <cstdint>
#include <memory>

#include "ncxfer/transport/endpoint.hpp"
#include "ncxfer/transport/inproc.hpp"
#include "ncxfer/transport/tcp.hpp"

namespace ncxfer {

// Two linked endpoints. `clock` is set only for the modeled backend.
struct Pair {
  Backend backend = Backend::InProc;
  std::unique_ptr<Endpoint> a;
  std::unique_ptr<Endpoint> b;
  std::shared_ptr<VirtualClock> clock;
};

struct TcpOptions {
  std::uint16_t port = 0;  // 0 picks an ephemeral port
};

inline Pair connect(Backend backend, const TransportConfig& cfg, TcpOptions tcp = {}) {
  cfg.validate();
  Pair pair;
  pair.backend = backend;
  switch (backend) {
    case Backend::InProc:
    case Backend::Modeled: {
      if (backend == Backend::Modeled) pair.clock = std::make_shared<VirtualClock>();
      auto shared = std::make_shared<detail::InProcShared>(cfg, pair.clock);
      pair.a = std::make_unique<InProcEndpoint>(shared, 0);
      pair.b = std::make_unique<InProcEndpoint>(shared, 1);
      break;
    }
    case Backend::Tcp: {
      TcpListener listener(tcp.port);
      pair.a = TcpEndpoint::dial("127.0.0.1", listener.port(), cfg);
      pair.b = std::make_unique<TcpEndpoint>(listener.accept(), cfg);
      break;
    }
  }
  return pair;
}

}  // namespace ncxfer
