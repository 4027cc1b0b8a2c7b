#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "genlab/error.hpp"

namespace genlab {

enum class ModelKind : std::uint8_t { gan = 0, wgan = 1, vae = 2, vaegan = 3, cvaegan = 4, classifier = 5 };

inline std::string_view to_string(ModelKind k) {
    switch (k) {
        case ModelKind::gan: return "gan";
        case ModelKind::wgan: return "wgan";
        case ModelKind::vae: return "vae";
        case ModelKind::vaegan: return "vaegan";
        case ModelKind::cvaegan: return "cvaegan";
        case ModelKind::classifier: return "classifier";
    }
    return "?";
}

inline ModelKind parse_model_kind(std::string_view s) {
    for (auto k : {ModelKind::gan, ModelKind::wgan, ModelKind::vae, ModelKind::vaegan, ModelKind::cvaegan,
                   ModelKind::classifier}) {
        if (to_string(k) == s) return k;
    }
    throw ConfigError("unknown model '" + std::string(s) + "' (expected gan, wgan, vae, vaegan or cvaegan)");
}

inline bool has_discriminator(ModelKind k) {
    return k == ModelKind::gan || k == ModelKind::wgan || k == ModelKind::vaegan || k == ModelKind::cvaegan;
}

inline bool has_encoder(ModelKind k) {
    return k == ModelKind::vae || k == ModelKind::vaegan || k == ModelKind::cvaegan;
}

}  // namespace genlab
