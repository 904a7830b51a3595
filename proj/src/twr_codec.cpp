#include <string>

#include "uwbloc/error.hpp"
#include "uwbloc/twr.hpp"

namespace uwbloc {

namespace {

void put_le(std::vector<std::uint8_t>& out, std::uint64_t value, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

std::uint64_t get_le(std::span<const std::uint8_t> in, std::size_t pos, int bytes) {
  std::uint64_t value = 0;
  for (int i = 0; i < bytes; ++i) value |= std::uint64_t{in[pos + i]} << (8 * i);
  return value;
}

std::size_t expected_length(FrameKind kind) {
  switch (kind) {
    case FrameKind::kPoll:
    case FrameKind::kResponse:
      return kHeaderBytes;
    case FrameKind::kFinal:
      return kHeaderBytes + kFinalPayloadBytes;
    case FrameKind::kReport:
      return kHeaderBytes + kReportPayloadBytes;
  }
  return 0;
}

bool is_known_kind(std::uint8_t byte) { return byte >= 0x01 && byte <= 0x04; }

void check_invariants(const Frame& f) {
  if (f.src.is_broadcast()) throw MalformedFrame("source address 255 is reserved");
  switch (f.kind) {
    case FrameKind::kPoll:
    case FrameKind::kResponse:
      if (!std::holds_alternative<std::monostate>(f.payload)) {
        throw MalformedFrame("POLL/RESPONSE carry no payload");
      }
      break;
    case FrameKind::kFinal:
      if (!std::holds_alternative<FinalPayload>(f.payload)) {
        throw MalformedFrame("FINAL requires a timestamp payload");
      }
      break;
    case FrameKind::kReport:
      if (!std::holds_alternative<ReportPayload>(f.payload)) {
        throw MalformedFrame("REPORT requires a distance payload");
      }
      if (!f.dst.is_broadcast()) throw MalformedFrame("REPORT must be broadcast");
      break;
    default:
      throw MalformedFrame("unknown kind");
  }
}

}  // namespace

const char* to_string(FrameKind kind) {
  switch (kind) {
    case FrameKind::kPoll:
      return "POLL";
    case FrameKind::kResponse:
      return "RESPONSE";
    case FrameKind::kFinal:
      return "FINAL";
    case FrameKind::kReport:
      return "REPORT";
  }
  return "?";
}

Frame make_poll(std::uint8_t seq, DeviceId tag, DeviceId anchor) {
  return Frame{FrameKind::kPoll, seq, tag, anchor, {}};
}

Frame make_response(std::uint8_t seq, DeviceId anchor, DeviceId tag) {
  return Frame{FrameKind::kResponse, seq, anchor, tag, {}};
}

Frame make_final(std::uint8_t seq, DeviceId tag, DeviceId anchor, const FinalPayload& times) {
  return Frame{FrameKind::kFinal, seq, tag, anchor, times};
}

Frame make_report(std::uint8_t seq, DeviceId anchor, DeviceId tag, std::uint32_t distance_mm) {
  return Frame{FrameKind::kReport, seq, anchor, kBroadcast, ReportPayload{tag, anchor, distance_mm}};
}

std::vector<std::uint8_t> encode_frame(const Frame& frame) {
  check_invariants(frame);
  std::vector<std::uint8_t> out;
  out.reserve(expected_length(frame.kind));
  out.push_back(static_cast<std::uint8_t>(frame.kind));
  out.push_back(frame.seq);
  out.push_back(frame.src.value);
  out.push_back(frame.dst.value);
  if (const auto* fin = std::get_if<FinalPayload>(&frame.payload)) {
    put_le(out, fin->poll_tx.ticks(), 5);
    put_le(out, fin->response_rx.ticks(), 5);
    put_le(out, fin->final_tx.ticks(), 5);
  } else if (const auto* rep = std::get_if<ReportPayload>(&frame.payload)) {
    out.push_back(rep->tag.value);
    out.push_back(rep->anchor.value);
    put_le(out, rep->distance_mm, 4);
  }
  return out;
}

Frame decode_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw MalformedFrame("empty buffer");
  if (!is_known_kind(bytes[0])) throw MalformedFrame("unknown kind byte " + std::to_string(bytes[0]));
  const auto kind = static_cast<FrameKind>(bytes[0]);
  if (bytes.size() != expected_length(kind)) {
    throw MalformedFrame(std::string(to_string(kind)) + " length " + std::to_string(bytes.size()));
  }

  Frame f;
  f.kind = kind;
  f.seq = bytes[1];
  f.src = DeviceId{bytes[2]};
  f.dst = DeviceId{bytes[3]};
  if (kind == FrameKind::kFinal) {
    f.payload = FinalPayload{TickTimestamp(get_le(bytes, 4, 5)), TickTimestamp(get_le(bytes, 9, 5)),
                             TickTimestamp(get_le(bytes, 14, 5))};
  } else if (kind == FrameKind::kReport) {
    f.payload = ReportPayload{DeviceId{bytes[4]}, DeviceId{bytes[5]},
                              static_cast<std::uint32_t>(get_le(bytes, 6, 4))};
  }
  check_invariants(f);
  return f;
}

}  // namespace uwbloc
