#pragma once

#include <stdexcept>
#include <string>

namespace rsc {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define RSC_DEFINE_ERROR(Name)                      \
    struct Name : Error {                           \
        using Error::Error;                         \
    }

RSC_DEFINE_ERROR(UnknownSymbol);
RSC_DEFINE_ERROR(GenerationExhausted);
RSC_DEFINE_ERROR(AlphabetMismatch);
RSC_DEFINE_ERROR(ParseError);
RSC_DEFINE_ERROR(IndexOutOfRange);
RSC_DEFINE_ERROR(ShapeMismatch);
RSC_DEFINE_ERROR(Diverged);
RSC_DEFINE_ERROR(EmptySet);
RSC_DEFINE_ERROR(SingularSystem);
RSC_DEFINE_ERROR(FidelityCheckFailed);
RSC_DEFINE_ERROR(TooFewPoints);
RSC_DEFINE_ERROR(ZeroBandwidth);
RSC_DEFINE_ERROR(DegenerateData);
RSC_DEFINE_ERROR(DegenerateLabels);
RSC_DEFINE_ERROR(SingularCovariance);
RSC_DEFINE_ERROR(BaseTooSmall);
RSC_DEFINE_ERROR(LengthMismatch);
RSC_DEFINE_ERROR(ConstantSequence);
RSC_DEFINE_ERROR(EmptyTrace);
RSC_DEFINE_ERROR(IncompleteAutomaton);

#undef RSC_DEFINE_ERROR

}  // namespace rsc
