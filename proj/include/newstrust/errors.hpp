#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace newstrust {

// Base for every error the library raises. `kind()` is a stable short tag
// used in job error lists and HTTP error bodies.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define NEWSTRUST_ERROR(Name, tag)                                   \
    class Name : public Error {                                      \
    public:                                                          \
        explicit Name(const std::string& what) : Error(tag, what) {} \
    }

NEWSTRUST_ERROR(ValidationError, "validation");
NEWSTRUST_ERROR(LabelingError, "labeling");
NEWSTRUST_ERROR(EmptyStratumError, "empty-stratum");
NEWSTRUST_ERROR(InfeasiblePlanError, "infeasible-plan");
NEWSTRUST_ERROR(ConfigError, "config");
NEWSTRUST_ERROR(IoError, "io");
NEWSTRUST_ERROR(ExtractionMiss, "extraction-miss");
NEWSTRUST_ERROR(BuildError, "build");
NEWSTRUST_ERROR(StratificationError, "stratification");
NEWSTRUST_ERROR(TrainingError, "training");
NEWSTRUST_ERROR(ModelError, "model");
NEWSTRUST_ERROR(BackendError, "backend");
NEWSTRUST_ERROR(EvaluationError, "evaluation");
NEWSTRUST_ERROR(NotFoundError, "not-found");
NEWSTRUST_ERROR(JobStateError, "job-state");

#undef NEWSTRUST_ERROR

// Per-URL fetch failure. `reason()` is one of timeout, dns, tls, connection,
// http-status, too-many-redirects, robots, bad-url.
class FetchError : public Error {
public:
    FetchError(std::string reason, const std::string& what)
        : Error("fetch", what), reason_(std::move(reason)) {}
    const std::string& reason() const noexcept { return reason_; }

private:
    std::string reason_;
};

// Malformed or truncated archive content; `offset` is the byte offset of the
// record that failed to parse.
class ArchiveError : public Error {
public:
    ArchiveError(std::uint64_t offset, const std::string& what)
        : Error("archive", what + " (at byte offset " + std::to_string(offset) + ")"),
          offset_(offset) {}
    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

}  // namespace newstrust
