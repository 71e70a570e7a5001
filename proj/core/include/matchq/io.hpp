#pragma once

#include <string>
#include <vector>

#include "matchq/blocks.hpp"
#include "matchq/model.hpp"

namespace matchq {

/// Parameter document: {"lambda1": r, "lambda2": r, "theta1": r,
/// "theta2": r, "m": int, "n": int}.
Params params_from_json_text(const std::string& text);
Params load_params_json(const std::string& path);
std::string params_to_json_text(const Params& p);

/// State labels "(i,j)" in window order, for CSV headers.
std::vector<std::string> window_state_labels(const Params& p, std::int64_t k_neg,
                                             std::int64_t k_pos);

/// Row-major CSV with a header row of state labels.
std::string matrix_to_csv(const Matrix& m, const std::vector<std::string>& labels);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace matchq
