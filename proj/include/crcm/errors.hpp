#pragma once

#include <stdexcept>
#include <string>

namespace crcm {

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define CRCM_ERROR_TYPE(Name)                                        \
    struct Name : Error {                                            \
        explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
    }

CRCM_ERROR_TYPE(NonStandardJ);
CRCM_ERROR_TYPE(ConjugateMismatch);
CRCM_ERROR_TYPE(CaseMismatch);
CRCM_ERROR_TYPE(SingularPairing);
CRCM_ERROR_TYPE(NotInAlgebra);
CRCM_ERROR_TYPE(DegenerateLevi);
CRCM_ERROR_TYPE(ParabolicUnsupported);
CRCM_ERROR_TYPE(SingularMatrix);
CRCM_ERROR_TYPE(NormalFormFailure);
CRCM_ERROR_TYPE(RankDrop);
CRCM_ERROR_TYPE(SizeMismatch);
CRCM_ERROR_TYPE(NotInGroup);
CRCM_ERROR_TYPE(AdaptednessLost);
CRCM_ERROR_TYPE(SingularDelta);
CRCM_ERROR_TYPE(StagePreconditionFailed);
CRCM_ERROR_TYPE(NotNormalized);
CRCM_ERROR_TYPE(ParseError);
CRCM_ERROR_TYPE(ValidationError);

#undef CRCM_ERROR_TYPE

} // namespace crcm
