#include "symfocus/error.hpp"

namespace symfocus {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::MalformedHeader: return "MalformedHeader";
        case ErrorCode::UnsupportedFeature: return "UnsupportedFeature";
        case ErrorCode::TruncatedPixelData: return "TruncatedPixelData";
        case ErrorCode::DegenerateCluster: return "DegenerateCluster";
        case ErrorCode::TooFewPoints: return "TooFewPoints";
        case ErrorCode::SingleCluster: return "SingleCluster";
        case ErrorCode::BadRange: return "BadRange";
        case ErrorCode::FlatImage: return "FlatImage";
        case ErrorCode::EmptyMask: return "EmptyMask";
        case ErrorCode::ZeroBaseline: return "ZeroBaseline";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::InvalidSpec: return "InvalidSpec";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

}  // namespace symfocus
