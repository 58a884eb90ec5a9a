#pragma once

#include <stdexcept>
#include <string>

namespace gtrec {

// Base for everything this project throws on purpose.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define GTREC_DEFINE_ERROR(NAME)                                    \
    class NAME : public Error {                                     \
    public:                                                         \
        explicit NAME(const std::string& what) : Error(#NAME ": " + what) {} \
    }

// corpus
GTREC_DEFINE_ERROR(ParseError);
GTREC_DEFINE_ERROR(EmptyDataset);
GTREC_DEFINE_ERROR(EmptySplit);

// context enrichment
GTREC_DEFINE_ERROR(UnknownTemplate);
GTREC_DEFINE_ERROR(MalformedResponse);
GTREC_DEFINE_ERROR(SchemaError);
GTREC_DEFINE_ERROR(ProviderExhausted);
GTREC_DEFINE_ERROR(ProviderError);

// embedding store
GTREC_DEFINE_ERROR(ShapeMismatch);
GTREC_DEFINE_ERROR(NonFiniteValue);
GTREC_DEFINE_ERROR(DuplicateKey);
GTREC_DEFINE_ERROR(MissingContext);
GTREC_DEFINE_ERROR(ZeroVector);
GTREC_DEFINE_ERROR(DimMismatch);

// diagnostics
GTREC_DEFINE_ERROR(EmptyHistory);

// model
GTREC_DEFINE_ERROR(UnknownItem);
GTREC_DEFINE_ERROR(SeqTooLong);
GTREC_DEFINE_ERROR(MissingEmbedding);
GTREC_DEFINE_ERROR(VariantMismatch);

// losses / sampling
GTREC_DEFINE_ERROR(EmptyPool);

// training
GTREC_DEFINE_ERROR(GradCheckFailed);

// cli
GTREC_DEFINE_ERROR(UnknownCommand);
GTREC_DEFINE_ERROR(IoError);
GTREC_DEFINE_ERROR(ConfigError);

#undef GTREC_DEFINE_ERROR

}  // namespace gtrec
