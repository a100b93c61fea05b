#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "iauth/model.hpp"
#include "iauth/trainer.hpp"

namespace iauth {

struct RunConfig {
    std::filesystem::path out = "out";
    std::map<std::string, std::filesystem::path> profiles;   // user -> profile file
    int days = 60;
    std::uint64_t seed = 1;
    int attack_count = 50;
    bool colocate_attacker = false;
    FitConfig fit;
    TrainConfig train;
};

RunConfig load_run_config(const std::filesystem::path& path);

void run_synth(const RunConfig& cfg);
void run_fit(const RunConfig& cfg);
void run_wedge(const RunConfig& cfg);
void run_train(const RunConfig& cfg);
void run_score(const RunConfig& cfg, const std::filesystem::path& trace_path,
               const std::filesystem::path& model_path, const std::string& out_base);
void run_eval(const RunConfig& cfg);

}  // namespace iauth
