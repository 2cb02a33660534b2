#pragma once

#include <memory>
#include <string>
#include <vector>

#include "octarl/critics.hpp"

namespace octarl {

// Adapter that scores artifacts through a child process speaking line-delimited
// JSON on stdin/stdout. Per request the artifact is written under work_dir and
// the child receives
//
//   {"grid": "<path>", "mesh": "<path>", "prompt_id": <n>}\n
//
// (keys omitted when the artifact lacks that part) and must answer
//
//   {"score": <real in [0,1]>}\n
//
// The child is spawned lazily on first use and kept alive; requests are
// serialized. Closing the adapter closes the child's stdin and reaps it.
std::shared_ptr<Critic> make_external_critic(std::vector<std::string> argv, std::string work_dir);

}  // namespace octarl
