#include "gsched/trace_io.hpp"

#include <charconv>
#include <map>

namespace gsched {

std::string format_event(const TraceEvent& e) {
    std::string out = e.time.to_string();
    out += '\t';
    out += std::to_string(e.rank);
    out += '\t';
    out += event_kind_name(e.kind);
    out += '\t';
    if (e.peer) {
        out += e.kind == EventKind::RecvCompleted ? '<' : '>';
        out += std::to_string(*e.peer);
    } else if (!e.gpus.empty()) {
        for (std::size_t i = 0; i < e.gpus.size(); ++i) {
            if (i > 0) {
                out += ',';
            }
            out += std::to_string(e.gpus[i]);
        }
    } else {
        out += '-';
    }
    out += '\t';
    out += e.subbatch ? e.subbatch->to_string() : "-";
    return out;
}

std::string export_trace(const Trace& trace) {
    std::string out;
    for (const auto& e : trace.events) {
        out += format_event(e);
        out += '\n';
    }
    return out;
}

namespace {

int to_int(std::string_view s, int line) {
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || p != s.data() + s.size()) {
        throw MalformedTrace("line " + std::to_string(line) + ": bad integer '" + std::string(s) + "'");
    }
    return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        parts.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) {
            return parts;
        }
        start = pos + 1;
    }
}

} // namespace

std::vector<TraceEvent> parse_trace_events(std::string_view text) {
    std::vector<TraceEvent> events;
    std::map<int, std::int64_t> next_seq;
    int line_no = 0;
    for (auto line : split(text, '\n')) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (line.empty()) {
            continue;
        }
        const auto fields = split(line, '\t');
        const auto where = "line " + std::to_string(line_no) + ": ";
        if (fields.size() != 5) {
            throw MalformedTrace(where + "expected 5 tab-separated fields, got " + std::to_string(fields.size()));
        }
        TraceEvent e;
        try {
            e.time = SimTime::parse(fields[0]);
        } catch (const std::invalid_argument& ex) {
            throw MalformedTrace(where + ex.what());
        }
        e.rank = to_int(fields[1], line_no);
        const auto kind = parse_event_kind(fields[2]);
        if (!kind) {
            throw MalformedTrace(where + "unknown event kind '" + std::string(fields[2]) + "'");
        }
        e.kind = *kind;
        const auto gpus = fields[3];
        if (gpus.starts_with('>') || gpus.starts_with('<')) {
            e.peer = to_int(gpus.substr(1), line_no);
        } else if (gpus != "-") {
            for (auto g : split(gpus, ',')) {
                e.gpus.push_back(to_int(g, line_no));
            }
        }
        if (fields[4] != "-") {
            const auto parts = split(fields[4], '.');
            if (parts.size() != 3) {
                throw MalformedTrace(where + "bad sub-batch reference '" + std::string(fields[4]) + "'");
            }
            e.subbatch = SubBatchRef{to_int(parts[0], line_no), to_int(parts[1], line_no), to_int(parts[2], line_no)};
        }
        e.seq = next_seq[e.rank]++;
        events.push_back(std::move(e));
    }
    return events;
}

} // namespace gsched
