#pragma once

#include <string>
#include <vector>

namespace srcl::cli {

/// Dispatches the synth / train / sweep / evaluate / saliency commands.
/// Returns the process exit code; errors are reported on stderr and yield a
/// nonzero status.
int run(const std::vector<std::string>& args);

} // namespace srcl::cli
