#pragma once

#include <stdexcept>
#include <string>

namespace vizrec {

// Base of every error raised by the library. `kind()` is the stable name used
// by the HTTP facade and the CLI.
class Error : public std::runtime_error {
public:
    Error(const char* kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}

    const char* kind() const noexcept { return kind_; }

private:
    const char* kind_;
};

#define VIZREC_DEFINE_ERROR(Name)                                        \
    class Name : public Error {                                          \
    public:                                                              \
        explicit Name(const std::string& msg) : Error(#Name, msg) {}     \
    };

VIZREC_DEFINE_ERROR(ParseError)
VIZREC_DEFINE_ERROR(EmptyDataset)
VIZREC_DEFINE_ERROR(UnknownField)
VIZREC_DEFINE_ERROR(InvalidSpec)
VIZREC_DEFINE_ERROR(UnsupportedChannel)
VIZREC_DEFINE_ERROR(InvalidBound)
VIZREC_DEFINE_ERROR(UnknownNode)
VIZREC_DEFINE_ERROR(NoValidSpec)
VIZREC_DEFINE_ERROR(UnknownPreset)
VIZREC_DEFINE_ERROR(TooManyAttributes)
VIZREC_DEFINE_ERROR(InvalidPage)
VIZREC_DEFINE_ERROR(UnknownDataset)
VIZREC_DEFINE_ERROR(UnknownSession)
VIZREC_DEFINE_ERROR(CapExceeded)
VIZREC_DEFINE_ERROR(NotExposed)
VIZREC_DEFINE_ERROR(MalformedLog)
VIZREC_DEFINE_ERROR(InvalidArgument)

#undef VIZREC_DEFINE_ERROR

} // namespace vizrec
