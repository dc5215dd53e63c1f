#include "perchomog/calibration.hpp"

namespace perchomog {

std::vector<std::pair<std::string, double>> calibration_table() {
  using namespace calib;
  return {
      {"sobolev_constant", kSobolevConstant},
      {"ms_poincare_constant", kMsPoincareConstant},
      {"caccioppoli_constant", kCaccioppoliConstant},
      {"lipschitz_constant", kLipschitzConstant},
      {"meyers_epsilon", kMeyersEpsilon},
      {"subadditivity_slack_nu", kSubadditivitySlackNu},
      {"subadditivity_slack_mu", kSubadditivitySlackMu},
      {"abar_agreement_slack", kAbarAgreementSlack},
      {"nu_loc_gap_95", kNuLocGap95},
      {"minimal_scale_c", kMinimalScaleC},
      {"minimal_scale_alpha", kMinimalScaleAlpha},
      {"degenerate_cell_deviation", kDegenerateCellDeviation},
  };
}

}  // namespace perchomog
