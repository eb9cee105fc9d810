#pragma once

#include "gsched/simkernel.hpp"

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gsched {

class MalformedTrace : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// One record per line:
//
//     time<TAB>rank<TAB>kind<TAB>gpus<TAB>rank.batch.sub
//
// time has a fixed 6-digit fraction. The gpus column lists the held GPUs
// ("0,1,2") for hold/compute events, the peer of a message event (">dst" on
// SendPosted, "<src" on RecvCompleted), and "-" otherwise. The last column is
// "-" when the event has no sub-batch; handoff signals carry the sender's last
// computed sub-batch there, batch-count exchange messages carry none.
std::string format_event(const TraceEvent& e);
std::string export_trace(const Trace& trace);

// Parses exported events; per-rank sequence numbers are rebuilt from line
// order. Throws MalformedTrace with the line number.
std::vector<TraceEvent> parse_trace_events(std::string_view text);

} // namespace gsched
