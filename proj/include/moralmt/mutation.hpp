#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "moralmt/oracle.hpp"
#include "moralmt/scenario.hpp"

namespace moralmt {

enum class MutationKind { SwapProtected, SubstituteSpecies, AdjustLaneCount, FlipCompliance };
std::string_view to_string(MutationKind k);

struct MutationOp {
  MutationKind kind = MutationKind::SwapProtected;
  std::string source_id;
  std::size_t slot = 0;   // SwapProtected, SubstituteSpecies
  std::string field;      // SwapProtected: gender | age_group | skin_tone | height
  std::string value;      // new value, or the substituted species
  int lane = 0;           // AdjustLaneCount, FlipCompliance
  int delta = 0;          // AdjustLaneCount

  friend bool operator==(const MutationOp&, const MutationOp&) = default;
};

nlohmann::json to_json(const MutationOp& op);
MutationOp mutation_op_from_json(const nlohmann::json& j);

struct FollowUp {
  Scenario scenario;
  std::vector<MutationOp> ops;
};

struct DeriveResult {
  std::vector<FollowUp> followups;
  std::optional<std::string> reason;  // set when nothing could be derived
};

// Follow-ups for `relation`, each valid and satisfying the relation's
// precondition (MMR1: against `s`; MMR2..4: on its own). Ids are
// "<s.id>_m<k>_<tag>_<n>", with tag defaulting to "d".
DeriveResult derive_followups(const Scenario& s, Relation relation, int budget, std::uint64_t seed,
                              const SimParams& params = {}, std::string_view tag = "d");

struct HistoryItem {
  Relation relation = Relation::MMR1;
  Decision decision = Decision::Pass;
  double margin = 0.0;
  int iteration = 0;
};

struct PoolEntry {
  Scenario scenario;
  double weight = 1.0;
  bool frozen = false;  // already an IRTC subject, not sampled again
  std::string origin;   // file it came from, or the parent scenario id
  std::vector<HistoryItem> history;
};

inline constexpr double kGuidanceDelta = 0.05;

double guidance_weight(double margin, double base = 1.0, double delta = kGuidanceDelta);

// Weighted sampling without replacement over unfrozen entries
// (Efraimidis-Spirakis keys). Returns pool indices ordered by descending
// weight, ties in pool order. Throws Error on an empty pool; k larger than
// the sampleable pool returns all of it.
std::vector<std::size_t> sample_sources(const std::vector<PoolEntry>& pool, std::size_t k,
                                        std::uint64_t seed);

// Applies each verdict to the entry whose scenario id is the verdict's
// subject: weight from the smallest |margin| seen, Violation freezes.
// Active weights are then rescaled to mean `base`.
void update_weights(std::vector<PoolEntry>& pool, const std::vector<MmrVerdict>& verdicts,
                    int iteration = 0, double base = 1.0);

}  // namespace moralmt
