#ifndef TIV_ERRORS_HPP
#define TIV_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace tiv {

// Error taxonomy shared by the library and the CLI exit-code mapping:
// ConfigError -> 2, DataError -> 3, NumericError -> 4.

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Unreadable or malformed inputs: files, manifests, shards, images.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Violated call contracts: shape mismatches, non-normalized vectors, etc.
struct ContractError : std::logic_error {
    explicit ContractError(const std::string& msg) : std::logic_error(msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Diverged training run; carries the last checkpoint that was still finite.
struct TrainingDivergedError : NumericError {
    std::string last_good_checkpoint;
    TrainingDivergedError(const std::string& msg, std::string checkpoint_path)
        : NumericError(msg), last_good_checkpoint(std::move(checkpoint_path)) {}
};

}  // namespace tiv

#endif
