/* Copyright 2026 The ovsim Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cstdio>
#include <ostream>
#include <sstream>

#include "ovsim/des.hpp"

namespace ovsim::des {

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::XferStart: return "xfer_start";
    case EventKind::XferEnd: return "xfer_end";
    case EventKind::LdReduceStart: return "ldreduce_start";
    case EventKind::LdReduceEnd: return "ldreduce_end";
    case EventKind::Signal: return "signal";
    case EventKind::SyncIntra: return "sync_intra";
    case EventKind::SyncInterSm: return "sync_inter_sm";
    case EventKind::SyncInterDevice: return "sync_inter_dev";
    case EventKind::Compute: return "compute";
    case EventKind::Hbm: return "hbm";
    case EventKind::WaitDone: return "wait_done";
    case EventKind::PortRate: return "port_rate";
  }
  return "?";
}

std::string format_record(const LogRecord& r) {
  std::string dst;
  if (r.kind == EventKind::PortRate) {
    dst = r.sm == 0 ? "egress" : "ingress";
  } else if (r.sm >= 0) {
    dst = "sm" + std::to_string(r.sm);
  } else if (r.dst_mask == 0) {
    dst = "-";
  } else {
    for (int d = 0; d < 64; ++d) {
      if ((r.dst_mask >> d) & 1u) {
        if (!dst.empty()) dst += ',';
        dst += std::to_string(d);
      }
    }
  }
  std::string mech = r.mech < 0 ? "-" : std::string(hw::short_name(static_cast<hw::MechanismKind>(r.mech)));
  char buf[160];
  std::snprintf(buf, sizeof buf, "%.3f %s %d %s %.0f %s %lld", r.time_ns, std::string(to_string(r.kind)).c_str(),
                r.src, dst.c_str(), r.bytes, mech.c_str(), static_cast<long long>(r.flow_id));
  return buf;
}

void EventLog::write(std::ostream& out) const {
  for (const auto& r : records_) out << format_record(r) << '\n';
}

std::string EventLog::str() const {
  std::ostringstream ss;
  write(ss);
  return ss.str();
}

}  // namespace ovsim::des
