// The stagerl command line: score, bucket, train, eval, report, make-toy.
#pragma once

#include <ostream>
#include <span>
#include <string>

#include "stagerl/curriculum.hpp"

namespace stagerl {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs one invocation. argv[0] is the program name. Returns the exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// One row per step: step,stage,stage_name,mean_reward,mean_length,
/// truncation_fraction,loss,kl_term,entropy_term,reward_failures,eval_score.
std::string train_log_csv(const TrainLog& log);

/// Reward-versus-step line chart with stage boundaries marked.
std::string train_log_svg(const TrainLog& log);

}  // namespace stagerl
