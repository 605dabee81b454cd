#include "aufd/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "aufd/errors.hpp"

namespace aufd {

const char* mode_name(Mode m) {
    switch (m) {
        case Mode::fused: return "fused";
        case Mode::vfe_only: return "vfe_only";
        case Mode::aue_only: return "aue_only";
        case Mode::baseline: return "baseline";
    }
    return "?";
}

Mode parse_mode(const std::string& s) {
    if (s == "fused") return Mode::fused;
    if (s == "vfe_only") return Mode::vfe_only;
    if (s == "aue_only") return Mode::aue_only;
    if (s == "baseline") return Mode::baseline;
    throw ConfigError("unknown mode '" + s + "' (expected fused|vfe_only|aue_only|baseline)");
}

const char* au_subset_label(AUSubsetName s) {
    switch (s) {
        case AUSubsetName::eyes: return "eyes";
        case AUSubsetName::nose: return "nose";
        case AUSubsetName::lips: return "lips";
        case AUSubsetName::all: return "all";
    }
    return "?";
}

AUSubsetName parse_au_subset(const std::string& s) {
    if (s == "eyes") return AUSubsetName::eyes;
    if (s == "nose") return AUSubsetName::nose;
    if (s == "lips") return AUSubsetName::lips;
    if (s == "all") return AUSubsetName::all;
    throw ConfigError("unknown au_subset '" + s + "' (expected eyes|nose|lips|all)");
}

const char* decay_mode_name(DecayMode m) {
    return m == DecayMode::factor ? "factor" : "exponential";
}

DecayMode parse_decay_mode(const std::string& s) {
    if (s == "factor") return DecayMode::factor;
    if (s == "exponential") return DecayMode::exponential;
    throw ConfigError("unknown decay_mode '" + s + "' (expected factor|exponential)");
}

int ModelConfig::m_visible() const {
    return static_cast<int>(std::lround(n_tokens() * (1.0 - static_cast<double>(mask_ratio))));
}

std::vector<std::string> ModelConfig::validate() const {
    std::vector<std::string> bad;
    auto positive = [&](int v, const char* name) {
        if (v <= 0) bad.push_back(std::string(name) + " must be positive, got " + std::to_string(v));
    };
    positive(t_f, "t_f");
    positive(h_px, "h_px");
    positive(w_px, "w_px");
    positive(tube_t, "tube_t");
    positive(tube_p, "tube_p");
    positive(d, "d");
    positive(l, "l");
    positive(heads, "heads");
    positive(batch, "batch");
    positive(accum_steps, "accum_steps");
    if (epochs < 0) bad.push_back("epochs must be >= 0");
    if (l_dec < 0) bad.push_back("l_dec must be >= 0 (0 mirrors l)");
    if (f_aus < 1 || f_aus > 16) bad.push_back("f_aus must be in 1..16");
    if (tube_t > 0 && t_f % tube_t != 0)
        bad.push_back("tube_t must divide t_f (" + std::to_string(tube_t) + " does not divide " +
                      std::to_string(t_f) + ")");
    if (tube_p > 0 && h_px % tube_p != 0)
        bad.push_back("tube_p must divide h_px (" + std::to_string(tube_p) + " does not divide " +
                      std::to_string(h_px) + ")");
    if (tube_p > 0 && w_px % tube_p != 0)
        bad.push_back("tube_p must divide w_px (" + std::to_string(tube_p) + " does not divide " +
                      std::to_string(w_px) + ")");
    if (heads > 0 && d % heads != 0)
        bad.push_back("heads must divide d (" + std::to_string(heads) + " does not divide " +
                      std::to_string(d) + ")");
    if (d % 4 != 0) bad.push_back("d must be divisible by 4 for the positional encoding split");
    if (!(mask_ratio >= 0.0f && mask_ratio < 1.0f))
        bad.push_back("mask_ratio must lie in [0,1), got " + std::to_string(mask_ratio));
    if (!(huber_delta > 0.0f)) bad.push_back("huber_delta must be positive");
    if (!(lr > 0.0f)) bad.push_back("lr must be positive");
    if (decay < 0.0f || decay >= 1.0f) bad.push_back("decay must lie in [0,1)");
    if (focal_gamma < 0.0f) bad.push_back("focal_gamma must be >= 0");
    if (!(focal_alpha > 0.0f && focal_alpha < 1.0f)) bad.push_back("focal_alpha must lie in (0,1)");
    return bad;
}

void ModelConfig::validate_or_throw() const {
    const auto bad = validate();
    if (bad.empty()) return;
    std::string msg = "invalid config:";
    for (const auto& b : bad) msg += " [" + b + "]";
    throw ConfigError(msg);
}

namespace {

std::string fmt_float(float v) {
    std::ostringstream os;
    os.precision(9); // round-trips binary32 exactly
    os << v;
    return os.str();
}

} // namespace

std::map<std::string, std::string> ModelConfig::to_map() const {
    std::map<std::string, std::string> m;
    m["t_f"] = std::to_string(t_f);
    m["h_px"] = std::to_string(h_px);
    m["w_px"] = std::to_string(w_px);
    m["tube_t"] = std::to_string(tube_t);
    m["tube_p"] = std::to_string(tube_p);
    m["d"] = std::to_string(d);
    m["l"] = std::to_string(l);
    m["l_dec"] = std::to_string(l_dec);
    m["heads"] = std::to_string(heads);
    m["f_aus"] = std::to_string(f_aus);
    m["mask_ratio"] = fmt_float(mask_ratio);
    m["huber_delta"] = fmt_float(huber_delta);
    m["focal_alpha"] = fmt_float(focal_alpha);
    m["focal_gamma"] = fmt_float(focal_gamma);
    m["lr"] = fmt_float(lr);
    m["decay"] = fmt_float(decay);
    m["decay_mode"] = decay_mode_name(decay_mode);
    m["batch"] = std::to_string(batch);
    m["accum_steps"] = std::to_string(accum_steps);
    m["epochs"] = std::to_string(epochs);
    m["seed"] = std::to_string(seed);
    m["mode"] = mode_name(mode);
    m["au_subset"] = au_subset_label(au_subset);
    m["loss_masked_only"] = loss_masked_only ? "1" : "0";
    m["au_channels_3"] = au_channels_3 ? "1" : "0";
    m["freeze_aue"] = freeze_aue ? "1" : "0";
    m["perturb_fake_only"] = perturb_fake_only ? "1" : "0";
    return m;
}

ModelConfig desk_preset() {
    return ModelConfig(); // defaults are the desk scale
}

ModelConfig paper_preset() {
    ModelConfig c;
    c.t_f = 16;
    c.h_px = 224;
    c.w_px = 224;
    c.tube_t = 2;
    c.tube_p = 16;
    c.d = 768;
    c.l = 11;
    c.heads = 12;
    c.lr = 1e-5f;
    c.accum_steps = 20;
    c.epochs = 600;
    return c;
}

ModelConfig preset_by_name(const std::string& name) {
    if (name == "desk") return desk_preset();
    if (name == "paper") return paper_preset();
    throw ConfigError("unknown preset '" + name + "' (expected desk|paper)");
}

namespace {

bool parse_bool(const std::string& v, int line) {
    if (v == "1" || v == "true") return true;
    if (v == "0" || v == "false") return false;
    throw ConfigError("line " + std::to_string(line) + ": expected boolean 0/1/true/false, got '" + v + "'");
}

template <typename T>
T parse_number(const std::string& v, int line) {
    std::istringstream is(v);
    T out{};
    is >> out;
    if (is.fail() || !is.eof())
        throw ConfigError("line " + std::to_string(line) + ": cannot parse number '" + v + "'");
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace

ModelConfig parse_config_text(const std::string& text, const ModelConfig& base) {
    ModelConfig cfg = base;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    std::vector<std::string> errors;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            errors.push_back("line " + std::to_string(line_no) + ": expected key=value, got '" + line + "'");
            continue;
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        try {
            if (key == "t_f") cfg.t_f = parse_number<int>(val, line_no);
            else if (key == "h_px") cfg.h_px = parse_number<int>(val, line_no);
            else if (key == "w_px") cfg.w_px = parse_number<int>(val, line_no);
            else if (key == "tube_t") cfg.tube_t = parse_number<int>(val, line_no);
            else if (key == "tube_p") cfg.tube_p = parse_number<int>(val, line_no);
            else if (key == "d") cfg.d = parse_number<int>(val, line_no);
            else if (key == "l") cfg.l = parse_number<int>(val, line_no);
            else if (key == "l_dec") cfg.l_dec = parse_number<int>(val, line_no);
            else if (key == "heads") cfg.heads = parse_number<int>(val, line_no);
            else if (key == "f_aus") cfg.f_aus = parse_number<int>(val, line_no);
            else if (key == "mask_ratio") cfg.mask_ratio = parse_number<float>(val, line_no);
            else if (key == "huber_delta") cfg.huber_delta = parse_number<float>(val, line_no);
            else if (key == "focal_alpha") cfg.focal_alpha = parse_number<float>(val, line_no);
            else if (key == "focal_gamma") cfg.focal_gamma = parse_number<float>(val, line_no);
            else if (key == "lr") cfg.lr = parse_number<float>(val, line_no);
            else if (key == "decay") cfg.decay = parse_number<float>(val, line_no);
            else if (key == "decay_mode") cfg.decay_mode = parse_decay_mode(val);
            else if (key == "batch") cfg.batch = parse_number<int>(val, line_no);
            else if (key == "accum_steps") cfg.accum_steps = parse_number<int>(val, line_no);
            else if (key == "epochs") cfg.epochs = parse_number<int>(val, line_no);
            else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(val, line_no);
            else if (key == "mode") cfg.mode = parse_mode(val);
            else if (key == "au_subset") cfg.au_subset = parse_au_subset(val);
            else if (key == "loss_masked_only") cfg.loss_masked_only = parse_bool(val, line_no);
            else if (key == "au_channels_3") cfg.au_channels_3 = parse_bool(val, line_no);
            else if (key == "freeze_aue") cfg.freeze_aue = parse_bool(val, line_no);
            else if (key == "perturb_fake_only") cfg.perturb_fake_only = parse_bool(val, line_no);
            else errors.push_back("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        } catch (const ConfigError& e) {
            errors.push_back(e.what());
        }
    }
    if (!errors.empty()) {
        std::string msg = "config parse failed:";
        for (const auto& e : errors) msg += " [" + e + "]";
        throw ConfigError(msg);
    }
    cfg.validate_or_throw();
    return cfg;
}

ModelConfig load_config(const std::filesystem::path& path, const ModelConfig& base) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), base);
}

std::string config_to_text(const ModelConfig& cfg) {
    std::string out;
    for (const auto& [k, v] : cfg.to_map()) out += k + "=" + v + "\n";
    return out;
}

} // namespace aufd
