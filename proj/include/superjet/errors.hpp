#pragma once

#include <stdexcept>
#include <string>

namespace superjet {

enum class Errc {
    ContextMismatch,
    NotHomogeneous,
    InvalidGenerator,
    OddLevelTooHigh,
    NotHydrodynamic,
    DegenerateMetric,
    NonInvertibleLeadingJacobian,
    MixedOddLevels,
    LevelOutOfRange,
    NotBihamiltonianVectorField,
    NotExact,
    ExactnessFailed,
    EtaNotConstant,
    EtaSingular,
    WdvvFailed,
    ResonantCalibration,
    ResonantSpectrum,
    UnsupportedResonance,
    ResonantLevel,
    NoSolution,
    Underdetermined,
    NonLocalObstruction,
    VerificationFailed,
    NotATauSymmetry,
    SyntaxError,
    UnknownGenerator,
    IoError,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
  public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
    Errc code() const { return code_; }

  private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace superjet
