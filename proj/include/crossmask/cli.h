// Entry point shared by the `crossmask` executable and the tests.

#ifndef CROSSMASK_CLI_H_
#define CROSSMASK_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace crossmask {

// Exit codes: 0 success, 1 data/IO error, 2 usage or configuration error.
// Failures print one JSON object {"error": {...}} on `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace crossmask

#endif  // CROSSMASK_CLI_H_
