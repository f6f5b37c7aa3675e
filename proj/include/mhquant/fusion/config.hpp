#pragma once

#include <cstdint>
#include <string>

#include "mhquant/errors.hpp"

namespace mhquant::fusion {

/// Which input branches the classifier consumes.
enum class ModalityMode {
    TriModal,     ///< image tokens + clinical vector + values vector
    ImageOnly,    ///< pooled image tokens alone
    VectorsOnly,  ///< the two embedded vectors, no image encoder
};

inline const char* to_string(ModalityMode m) {
    switch (m) {
        case ModalityMode::TriModal:    return "tri_modal";
        case ModalityMode::ImageOnly:   return "image_only";
        case ModalityMode::VectorsOnly: return "vectors_only";
    }
    return "?";
}

inline ModalityMode parse_modality(const std::string& s) {
    if (s == "tri_modal") return ModalityMode::TriModal;
    if (s == "image_only") return ModalityMode::ImageOnly;
    if (s == "vectors_only") return ModalityMode::VectorsOnly;
    throw ConfigError("unknown modality mode: " + s);
}

/// Who asks and who answers inside the fusion cross-attention.
enum class CrossAttentionDirection {
    VectorQueriesImage,  ///< one vector-token query over all image tokens
    ImageQueriesVector,  ///< image tokens query the vector token, then pool
};

inline const char* to_string(CrossAttentionDirection d) {
    return d == CrossAttentionDirection::VectorQueriesImage ? "vector_queries_image"
                                                            : "image_queries_vector";
}

inline CrossAttentionDirection parse_ca_direction(const std::string& s) {
    if (s == "vector_queries_image") return CrossAttentionDirection::VectorQueriesImage;
    if (s == "image_queries_vector") return CrossAttentionDirection::ImageQueriesVector;
    throw ConfigError("unknown cross-attention direction: " + s);
}

struct FusionConfig {
    int image_size = 64;  ///< square input, pixels
    int patch = 16;       ///< square patch edge, pixels
    int d_model = 64;
    int n_heads = 4;
    int n_encoder_blocks = 2;
    int clinical_dim = 0;
    int values_dim = 0;
    int head_hidden = 64;
    ModalityMode modality = ModalityMode::TriModal;
    CrossAttentionDirection ca_direction = CrossAttentionDirection::VectorQueriesImage;
    std::uint64_t seed = 1;

    bool uses_image() const { return modality != ModalityMode::VectorsOnly; }
    bool uses_vectors() const { return modality != ModalityMode::ImageOnly; }

    int patch_dim() const { return patch * patch; }
    int tokens_per_side() const { return image_size / patch; }
    int n_tokens() const { return tokens_per_side() * tokens_per_side(); }
    int ff_hidden() const { return 2 * d_model; }
    int head_dim() const { return d_model / n_heads; }

    /// Width of the concatenated feature vector entering the head.
    int feature_width() const {
        switch (modality) {
            case ModalityMode::TriModal:    return 3 * d_model;
            case ModalityMode::ImageOnly:   return d_model;
            case ModalityMode::VectorsOnly: return 2 * d_model;
        }
        return 0;
    }

    void validate() const {
        if (image_size <= 0 || patch <= 0 || d_model <= 0 || n_heads <= 0 ||
            n_encoder_blocks < 0 || head_hidden <= 0)
            throw ConfigError("fusion dimensions must be positive");
        if (uses_image() && image_size % patch != 0)
            throw ConfigError("image_size must be divisible by patch");
        if (d_model % n_heads != 0)
            throw ConfigError("d_model must be divisible by n_heads");
        if (uses_vectors() && (clinical_dim <= 0 || values_dim <= 0))
            throw ConfigError("clinical_dim and values_dim must be positive for vector modes");
    }
};

}  // namespace mhquant::fusion
