#pragma once

#include <stdexcept>
#include <string>

namespace b0spec {

/// Broad failure classes; the CLI maps them onto exit codes.
enum class ErrorClass { Config, Data, Numerical };

class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), class_(cls) {}
    ErrorClass error_class() const noexcept { return class_; }

private:
    ErrorClass class_;
};

#define B0SPEC_DEFINE_ERROR(Name, Cls)                                                  \
    class Name : public Error {                                                         \
    public:                                                                             \
        explicit Name(const std::string& what) : Error(ErrorClass::Cls, #Name ": " + what) {} \
    };

B0SPEC_DEFINE_ERROR(ConfigError, Config)
B0SPEC_DEFINE_ERROR(ShapeError, Data)
B0SPEC_DEFINE_ERROR(InputError, Data)
B0SPEC_DEFINE_ERROR(ManifestError, Data)
B0SPEC_DEFINE_ERROR(DatasetError, Data)
B0SPEC_DEFINE_ERROR(PatchError, Data)
B0SPEC_DEFINE_ERROR(UntrainedError, Data)
B0SPEC_DEFINE_ERROR(CacheError, Data)
B0SPEC_DEFINE_ERROR(CheckpointError, Data)
B0SPEC_DEFINE_ERROR(ConstantVector, Numerical)
B0SPEC_DEFINE_ERROR(DivisionByZeroTruth, Numerical)
B0SPEC_DEFINE_ERROR(LineshapeError, Numerical)
B0SPEC_DEFINE_ERROR(TuningError, Numerical)
B0SPEC_DEFINE_ERROR(DivergenceError, Numerical)
B0SPEC_DEFINE_ERROR(SingularBasisError, Numerical)
B0SPEC_DEFINE_ERROR(ZeroReferenceError, Numerical)

#undef B0SPEC_DEFINE_ERROR

}  // namespace b0spec
