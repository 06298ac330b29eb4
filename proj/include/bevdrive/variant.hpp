#pragma once

#include <stdexcept>
#include <string>

namespace bevdrive {

// State-representation variants under study. Exactly one is active per run.
enum class VariantId {
  Expert = 0,
  StaticPredicted,
  NoStatic,
  TargetHeatmap,
  PredictedRoute,
  GtBinaryStop,
  PredictedBinaryStop,
  MeasurementFlagStop,
};

inline const char* variant_name(VariantId v) {
  switch (v) {
    case VariantId::Expert: return "Expert";
    case VariantId::StaticPredicted: return "StaticPredicted";
    case VariantId::NoStatic: return "NoStatic";
    case VariantId::TargetHeatmap: return "TargetHeatmap";
    case VariantId::PredictedRoute: return "PredictedRoute";
    case VariantId::GtBinaryStop: return "GtBinaryStop";
    case VariantId::PredictedBinaryStop: return "PredictedBinaryStop";
    case VariantId::MeasurementFlagStop: return "MeasurementFlagStop";
  }
  return "unknown";
}

inline VariantId variant_from_name(const std::string& name) {
  for (int i = 0; i <= static_cast<int>(VariantId::MeasurementFlagStop); ++i) {
    const auto v = static_cast<VariantId>(i);
    if (name == variant_name(v)) return v;
  }
  throw std::runtime_error("unknown variant: " + name);
}

}  // namespace bevdrive
