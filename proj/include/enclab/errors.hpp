#pragma once

#include <stdexcept>
#include <string>

namespace enclab {

/// Broad error classes; the CLI maps each to an exit code.
enum class ErrorClass {
  kConfig,        // exit 2
  kSolver,        // exit 3
  kVerification,  // exit 4
  kInput,         // bad arguments / files, exit 2
};

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, std::string name, const std::string& what)
      : std::runtime_error(name + ": " + what), class_(cls), name_(std::move(name)) {}

  ErrorClass error_class() const noexcept { return class_; }
  /// Short error name, e.g. "SingularSystem".
  const std::string& name() const noexcept { return name_; }

 private:
  ErrorClass class_;
  std::string name_;
};

#define ENCLAB_DEFINE_ERROR(Name, Class)                                     \
  class Name : public Error {                                                \
   public:                                                                   \
    explicit Name(const std::string& what) : Error(Class, #Name, what) {}    \
  }

ENCLAB_DEFINE_ERROR(InvalidArgument, ErrorClass::kInput);
// geometry
ENCLAB_DEFINE_ERROR(InvalidShape, ErrorClass::kInput);
ENCLAB_DEFINE_ERROR(DegenerateSlices, ErrorClass::kSolver);
ENCLAB_DEFINE_ERROR(QuadratureNotConverged, ErrorClass::kSolver);
// mesh
ENCLAB_DEFINE_ERROR(GeometryClash, ErrorClass::kInput);
ENCLAB_DEFINE_ERROR(InvariantViolation, ErrorClass::kInput);
// fem
ENCLAB_DEFINE_ERROR(SingularSystem, ErrorClass::kSolver);
ENCLAB_DEFINE_ERROR(MeshMismatch, ErrorClass::kInput);
ENCLAB_DEFINE_ERROR(ZeroDenominator, ErrorClass::kSolver);
// cgo
ENCLAB_DEFINE_ERROR(BornDiverged, ErrorClass::kSolver);
ENCLAB_DEFINE_ERROR(NoConvergence, ErrorClass::kSolver);
// indicator
ENCLAB_DEFINE_ERROR(EmptyFamily, ErrorClass::kInput);
ENCLAB_DEFINE_ERROR(SourceTooClose, ErrorClass::kInput);
// reconstruct
ENCLAB_DEFINE_ERROR(TooFewReliable, ErrorClass::kSolver);
ENCLAB_DEFINE_ERROR(NonPositivePart, ErrorClass::kSolver);
ENCLAB_DEFINE_ERROR(NoBracket, ErrorClass::kSolver);
ENCLAB_DEFINE_ERROR(EmptyIntersection, ErrorClass::kSolver);
// cli
ENCLAB_DEFINE_ERROR(ConfigError, ErrorClass::kConfig);

#undef ENCLAB_DEFINE_ERROR

/// Mesh-file parse failure, carrying the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(int line, const std::string& what)
      : Error(ErrorClass::kInput, "ParseError", "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace enclab
