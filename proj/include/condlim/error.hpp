#pragma once

#include <stdexcept>
#include <string>

namespace condlim {

// Process exit codes used by the CLI; every library error maps onto one.
enum class ErrorClass { kConfig = 2, kBudget = 3, kPrecondition = 4, kConvergence = 5 };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& name, const std::string& what)
      : std::runtime_error(name + ": " + what), cls_(cls), name_(name) {}
  ErrorClass error_class() const { return cls_; }
  int exit_code() const { return static_cast<int>(cls_); }
  const std::string& name() const { return name_; }

 private:
  ErrorClass cls_;
  std::string name_;
};

#define CONDLIM_DEFINE_ERROR(Type, Cls)                                   \
  class Type : public Error {                                             \
   public:                                                                \
    explicit Type(const std::string& what) : Error(Cls, #Type, what) {}   \
  };

CONDLIM_DEFINE_ERROR(ConfigError, ErrorClass::kConfig)
CONDLIM_DEFINE_ERROR(InvalidModel, ErrorClass::kConfig)
CONDLIM_DEFINE_ERROR(NonPrimitive, ErrorClass::kConfig)
CONDLIM_DEFINE_ERROR(BudgetExceeded, ErrorClass::kBudget)
CONDLIM_DEFINE_ERROR(WindowOutOfRange, ErrorClass::kPrecondition)
CONDLIM_DEFINE_ERROR(PastDependence, ErrorClass::kPrecondition)
CONDLIM_DEFINE_ERROR(NonZeroMean, ErrorClass::kPrecondition)
CONDLIM_DEFINE_ERROR(IsCoboundary, ErrorClass::kPrecondition)
CONDLIM_DEFINE_ERROR(NotLattice, ErrorClass::kPrecondition)
CONDLIM_DEFINE_ERROR(AnchorMismatch, ErrorClass::kPrecondition)
CONDLIM_DEFINE_ERROR(GridNotClosed, ErrorClass::kPrecondition)
CONDLIM_DEFINE_ERROR(ZeroHarmonic, ErrorClass::kPrecondition)
CONDLIM_DEFINE_ERROR(TooFewSurvivors, ErrorClass::kPrecondition)
CONDLIM_DEFINE_ERROR(ArithmeticObservable, ErrorClass::kPrecondition)
CONDLIM_DEFINE_ERROR(PreconditionFailed, ErrorClass::kPrecondition)
CONDLIM_DEFINE_ERROR(NoConvergence, ErrorClass::kConvergence)
CONDLIM_DEFINE_ERROR(EigenvalueCollision, ErrorClass::kConvergence)

#undef CONDLIM_DEFINE_ERROR

}  // namespace condlim
