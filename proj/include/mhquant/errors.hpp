#pragma once

#include <stdexcept>
#include <string>

namespace mhquant {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class FileNotFoundError : public Error {
public:
    explicit FileNotFoundError(const std::string& path)
        : Error("file not found: " + path), path(path) {}
    std::string path;
};

class MalformedRowError : public Error {
public:
    MalformedRowError(int line, const std::string& reason)
        : Error("line " + std::to_string(line) + ": " + reason), line(line), reason(reason) {}
    int line;
    std::string reason;
};

class DuplicateStageError : public Error {
public:
    DuplicateStageError(const std::string& eye_id, const std::string& stage)
        : Error("duplicate stage " + stage + " for eye " + eye_id),
          eye_id(eye_id), stage(stage) {}
    std::string eye_id;
    std::string stage;
};

class UnknownLabelCodeError : public Error {
public:
    UnknownLabelCodeError(int code, int x, int y)
        : Error("unknown label code " + std::to_string(code) + " at (" +
                std::to_string(x) + ", " + std::to_string(y) + ")"),
          code(code), x(x), y(y) {}
    int code, x, y;
};

class UnreadableImageError : public Error {
public:
    explicit UnreadableImageError(const std::string& detail)
        : Error("unreadable image: " + detail) {}
};

class MissingBcvaError : public Error {
public:
    explicit MissingBcvaError(const std::string& stage)
        : Error("BCVA missing at stage " + stage), stage(stage) {}
    std::string stage;
};

class NoScansError : public Error {
public:
    NoScansError(const std::string& eye_id, const std::string& stage)
        : Error("no scans for eye " + eye_id + " at stage " + stage) {}
};

class MissingBaselineError : public Error {
public:
    explicit MissingBaselineError(const std::string& what_missing)
        : Error("missing preoperative baseline: " + what_missing) {}
};

class ZeroDayError : public Error {
public:
    ZeroDayError() : Error("resolution day must be positive") {}
};

class EmptyComponentError : public Error {
public:
    EmptyComponentError() : Error("empty pixel component") {}
};

class DegenerateSampleError : public Error {
public:
    explicit DegenerateSampleError(const std::string& detail)
        : Error("degenerate sample: " + detail) {}
};

class AllColumnsDroppedError : public Error {
public:
    AllColumnsDroppedError() : Error("cleaning dropped every column") {}
};

class RankDeficientError : public Error {
public:
    explicit RankDeficientError(const std::string& detail)
        : Error("rank-deficient design: " + detail) {}
};

class OneClassOnlyError : public Error {
public:
    OneClassOnlyError() : Error("outcome contains a single class") {}
};

class ShapeMismatchError : public Error {
public:
    explicit ShapeMismatchError(const std::string& detail)
        : Error("shape mismatch: " + detail) {}
};

class EmptyInputError : public Error {
public:
    explicit EmptyInputError(const std::string& detail) : Error("empty input: " + detail) {}
};

class InsufficientDataError : public Error {
public:
    explicit InsufficientDataError(const std::string& detail)
        : Error("insufficient data: " + detail) {}
};

class DivergedError : public Error {
public:
    explicit DivergedError(const std::string& detail) : Error("training diverged: " + detail) {}
};

class NonFiniteError : public Error {
public:
    explicit NonFiniteError(const std::string& parameter)
        : Error("non-finite value in " + parameter), parameter(parameter) {}
    std::string parameter;
};

class UnpairedFileError : public Error {
public:
    explicit UnpairedFileError(const std::string& name)
        : Error("no matching file for " + name), name(name) {}
    std::string name;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& detail) : Error("config: " + detail) {}
};

}  // namespace mhquant
