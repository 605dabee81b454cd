#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace aufd {

enum class Mode { fused, vfe_only, aue_only, baseline };
enum class AUSubsetName { eyes, nose, lips, all };
enum class DecayMode { factor, exponential };

const char* mode_name(Mode m);
Mode parse_mode(const std::string& s);
const char* au_subset_label(AUSubsetName s);
AUSubsetName parse_au_subset(const std::string& s);
const char* decay_mode_name(DecayMode m);
DecayMode parse_decay_mode(const std::string& s);

// Architecture and training hyperparameters. Token count N and visible
// count M are derived, never stored.
struct ModelConfig {
    int t_f = 8;      // frames per clip
    int h_px = 64;    // frame height
    int w_px = 64;    // frame width
    int tube_t = 2;   // tube temporal extent
    int tube_p = 8;   // tube spatial patch size
    int d = 64;       // token embedding width
    int l = 4;        // encoder depth
    int l_dec = 0;    // decoder depth; 0 mirrors l
    int heads = 4;    // attention heads
    int f_aus = 16;   // action-unit channel count

    float mask_ratio = 0.5f;
    float huber_delta = 1.0f;
    float focal_alpha = 0.25f;
    float focal_gamma = 2.0f;

    float lr = 1e-3f;
    float decay = 1e-3f; // per-epoch decay constant
    DecayMode decay_mode = DecayMode::factor;
    int batch = 8;
    int accum_steps = 2;
    int epochs = 30;
    std::uint64_t seed = 0;

    Mode mode = Mode::fused;
    AUSubsetName au_subset = AUSubsetName::all;
    bool loss_masked_only = false; // Huber over masked tokens only
    bool au_channels_3 = false;    // replicate AU maps to 3 channels at the loss
    bool freeze_aue = false;
    bool perturb_fake_only = false;

    int grid_t() const { return t_f / tube_t; }
    int grid_h() const { return h_px / tube_p; }
    int grid_w() const { return w_px / tube_p; }
    int n_tokens() const { return grid_t() * grid_h() * grid_w(); }
    int m_visible() const;
    int head_dim() const { return d / heads; }
    int token_dim() const { return tube_t * 3 * tube_p * tube_p; }
    int au_token_dim() const {
        return tube_t * f_aus * (au_channels_3 ? 3 : 1) * tube_p * tube_p;
    }
    int decoder_depth() const { return l_dec > 0 ? l_dec : l; }

    // Returns every violated constraint, empty when valid.
    std::vector<std::string> validate() const;
    void validate_or_throw() const;

    // Ordered key=value view; round-trips through parse_config.
    std::map<std::string, std::string> to_map() const;
};

ModelConfig desk_preset();
ModelConfig paper_preset();
ModelConfig preset_by_name(const std::string& name);

// Parses key=value lines (# comments, blank lines allowed). Unknown keys are
// rejected with their line number. Absent keys keep base-config values.
ModelConfig parse_config_text(const std::string& text, const ModelConfig& base = ModelConfig());
ModelConfig load_config(const std::filesystem::path& path, const ModelConfig& base = ModelConfig());
std::string config_to_text(const ModelConfig& cfg);

} // namespace aufd
