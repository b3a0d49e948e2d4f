#pragma once

#include <stdexcept>
#include <string>

namespace sfm {

/// Base class of all errors thrown by this library.
class SfmError : public std::runtime_error {
public:
    explicit SfmError(const std::string& msg) : std::runtime_error(msg) {}
};

#define SFM_DEFINE_ERROR(Name)                                              \
    class Name : public SfmError {                                          \
    public:                                                                 \
        explicit Name(const std::string& msg) : SfmError(#Name ": " + msg) {} \
    }

// model
SFM_DEFINE_ERROR(GeneratorRowSum);
SFM_DEFINE_ERROR(SignPartitionMismatch);
SFM_DEFINE_ERROR(NotIrreducible);
SFM_DEFINE_ERROR(SingularSystem);
SFM_DEFINE_ERROR(SingularTabooBlock);
SFM_DEFINE_ERROR(ParseError);

// matcalc
SFM_DEFINE_ERROR(DimensionMismatch);
SFM_DEFINE_ERROR(SingularMatrix);
SFM_DEFINE_ERROR(NonFinite);

// firstreturn
SFM_DEFINE_ERROR(NoConvergence);
SFM_DEFINE_ERROR(NullRecurrent);
SFM_DEFINE_ERROR(SpectraOverlap);

// stationary
SFM_DEFINE_ERROR(UnstableModel);
SFM_DEFINE_ERROR(SingularK);
SFM_DEFINE_ERROR(SingularConstraintSystem);

// transient
SFM_DEFINE_ERROR(SingularPassageSystem);
SFM_DEFINE_ERROR(SingularRepeatFactor);

// ilt
SFM_DEFINE_ERROR(InversionAccuracyLoss);

// hydro
SFM_DEFINE_ERROR(InvalidBoundarySpec);

// cli / ruin
SFM_DEFINE_ERROR(InvalidPhaseType);
SFM_DEFINE_ERROR(NegativeLoading);

#undef SFM_DEFINE_ERROR

} // namespace sfm
