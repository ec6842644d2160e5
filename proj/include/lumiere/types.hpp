#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace lumiere {

using Tick = std::int64_t;
using View = std::int64_t;
using Epoch = std::int64_t;
using ProcessorId = std::uint32_t;

inline constexpr View kNoView = -1;
inline constexpr Epoch kNoEpoch = -1;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Views are grouped into epochs of a fixed length. Lumiere uses 10n views,
// Basic Lumiere 2(f+1) and LP22 f+1.
struct EpochLayout {
  View views_per_epoch = 40;

  constexpr Epoch epoch_of(View v) const {
    if (v < 0) return kNoEpoch;
    return v / views_per_epoch;
  }
  constexpr View first_view_of(Epoch e) const { return e * views_per_epoch; }
  constexpr bool is_epoch_view(View v) const {
    return v >= 0 && v % views_per_epoch == 0;
  }
};

constexpr Epoch epoch_of(View v, int n) { return EpochLayout{10 * View{n}}.epoch_of(v); }
constexpr View first_view_of(Epoch e, int n) { return EpochLayout{10 * View{n}}.first_view_of(e); }

constexpr bool is_initial(View v) { return v >= 0 && v % 2 == 0; }

struct ViewClass {
  bool initial = false;
  bool epoch_view = false;
  friend constexpr bool operator==(ViewClass, ViewClass) = default;
};

constexpr ViewClass classify_view(View v, int n) {
  return {is_initial(v), EpochLayout{10 * View{n}}.is_epoch_view(v)};
}

constexpr Tick clock_time_of(View v, Tick gamma) { return gamma * v; }

// Γ = 2(x+2)Δ for Lumiere and Basic Lumiere; (x+1)Δ for LP22.
constexpr Tick lumiere_gamma(int x, Tick delta) { return 2 * (x + 2) * delta; }
constexpr Tick lp22_gamma(int x, Tick delta) { return (x + 1) * delta; }

// ---------------------------------------------------------------------------
// Signatures and certificates

// What a partial signature attests to. View and VC messages share the
// "view v" payload; epoch-view, TC and EC share "epoch view v"; votes and QCs
// share "vote v".
enum class PayloadKind : std::uint8_t { View, EpochView, Vote };

struct Payload {
  PayloadKind kind = PayloadKind::View;
  View view = 0;
  friend auto operator<=>(const Payload&, const Payload&) = default;
};

struct PartialSig {
  ProcessorId signer = 0;
  Payload payload;
  friend auto operator<=>(const PartialSig&, const PartialSig&) = default;
};

// Simulated threshold signature: an explicit sorted signer set. Accounted as
// a single constant-size message regardless of the number of signers.
struct ThresholdSig {
  Payload payload;
  std::vector<ProcessorId> signers;  // sorted, distinct
  int threshold = 0;
  friend auto operator<=>(const ThresholdSig&, const ThresholdSig&) = default;
};

using Certificate = ThresholdSig;

enum class MsgKind : std::uint8_t { View, EpochView, VC, EC, TC, Proposal, Vote, QC };

constexpr std::string_view to_string(MsgKind k) {
  switch (k) {
    case MsgKind::View: return "view";
    case MsgKind::EpochView: return "epoch_view";
    case MsgKind::VC: return "vc";
    case MsgKind::EC: return "ec";
    case MsgKind::TC: return "tc";
    case MsgKind::Proposal: return "proposal";
    case MsgKind::Vote: return "vote";
    case MsgKind::QC: return "qc";
  }
  return "?";
}

constexpr PayloadKind payload_kind_of(MsgKind k) {
  switch (k) {
    case MsgKind::View:
    case MsgKind::VC:
    case MsgKind::Proposal:
      return PayloadKind::View;
    case MsgKind::EpochView:
    case MsgKind::EC:
    case MsgKind::TC:
      return PayloadKind::EpochView;
    case MsgKind::Vote:
    case MsgKind::QC:
      return PayloadKind::Vote;
  }
  return PayloadKind::View;
}

constexpr bool carries_certificate(MsgKind k) {
  return k == MsgKind::VC || k == MsgKind::EC || k == MsgKind::TC || k == MsgKind::QC;
}

struct Message {
  MsgKind kind = MsgKind::View;
  View view = 0;
  ProcessorId sender = 0;
  // Single-signer messages carry a partial; certificate messages an aggregate.
  std::variant<PartialSig, ThresholdSig> sig;

  const ThresholdSig* cert() const { return std::get_if<ThresholdSig>(&sig); }
  const PartialSig* partial() const { return std::get_if<PartialSig>(&sig); }
};

// Thresholds: f+1 for VC and TC, 2f+1 for QC and EC.
constexpr int required_threshold(MsgKind k, int f) {
  switch (k) {
    case MsgKind::VC:
    case MsgKind::TC:
      return f + 1;
    case MsgKind::QC:
    case MsgKind::EC:
      return 2 * f + 1;
    default:
      return 1;
  }
}

}  // namespace lumiere
