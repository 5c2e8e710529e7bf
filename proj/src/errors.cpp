#include "superjet/errors.hpp"

namespace superjet {

const char* errc_name(Errc c) {
    switch (c) {
        case Errc::ContextMismatch: return "ContextMismatch";
        case Errc::NotHomogeneous: return "NotHomogeneous";
        case Errc::InvalidGenerator: return "InvalidGenerator";
        case Errc::OddLevelTooHigh: return "OddLevelTooHigh";
        case Errc::NotHydrodynamic: return "NotHydrodynamic";
        case Errc::DegenerateMetric: return "DegenerateMetric";
        case Errc::NonInvertibleLeadingJacobian: return "NonInvertibleLeadingJacobian";
        case Errc::MixedOddLevels: return "MixedOddLevels";
        case Errc::LevelOutOfRange: return "LevelOutOfRange";
        case Errc::NotBihamiltonianVectorField: return "NotBihamiltonianVectorField";
        case Errc::NotExact: return "NotExact";
        case Errc::ExactnessFailed: return "ExactnessFailed";
        case Errc::EtaNotConstant: return "EtaNotConstant";
        case Errc::EtaSingular: return "EtaSingular";
        case Errc::WdvvFailed: return "WdvvFailed";
        case Errc::ResonantCalibration: return "ResonantCalibration";
        case Errc::ResonantSpectrum: return "ResonantSpectrum";
        case Errc::UnsupportedResonance: return "UnsupportedResonance";
        case Errc::ResonantLevel: return "ResonantLevel";
        case Errc::NoSolution: return "NoSolution";
        case Errc::Underdetermined: return "Underdetermined";
        case Errc::NonLocalObstruction: return "NonLocalObstruction";
        case Errc::VerificationFailed: return "VerificationFailed";
        case Errc::NotATauSymmetry: return "NotATauSymmetry";
        case Errc::SyntaxError: return "SyntaxError";
        case Errc::UnknownGenerator: return "UnknownGenerator";
        case Errc::IoError: return "IoError";
    }
    return "UnknownError";
}

}  // namespace superjet
