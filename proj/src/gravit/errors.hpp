#pragma once

#include <stdexcept>
#include <string>

namespace gravit {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised by data ingestion. The code identifies the violated invariant so
// callers (and tests) do not have to parse the message.
class IngestError : public Error {
public:
    enum class Code {
        missing_file,
        bad_header,
        wrong_plane_count,
        non_square_planes,
        bad_side,
        bad_manifest,
        missing_pool,
        pool_underflow,
        class_imbalance,
    };

    IngestError(Code code, const std::string& msg) : Error(msg), code_(code) {}
    Code code() const { return code_; }

private:
    Code code_;
};

// AUC is undefined when only one class is present.
class UndefinedAucError : public Error {
public:
    using Error::Error;
};

// Ensemble members whose sample sets do not line up.
class AlignmentError : public Error {
public:
    using Error::Error;
};

// Training aborted on a non-finite loss.
class DivergedError : public Error {
public:
    DivergedError(const std::string& msg, int epoch, int batch, double lr)
        : Error(msg), epoch(epoch), batch(batch), lr(lr) {}
    int epoch;
    int batch;
    double lr;
};

}  // namespace gravit
