#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace repcount {

struct DensityMap {
    std::string video_id;
    std::string action;
    std::vector<double> scores;    // in [0,1], one per frame
    std::vector<bool> valid_mask;  // false frames never change trigger state

    std::size_t size() const { return scores.size(); }
    void validate() const;
};

// Which salient pose opens a repetition. The default treats a repetition as
// pose I (high score) followed by pose II (low score).
enum class TriggerOrder { PoseIThenII, PoseIIThenI };

struct TriggerConfig {
    double upper = 0.8;
    double lower = 0.2;
    int smoothing_window = 3;
    TriggerOrder order = TriggerOrder::PoseIThenII;

    void validate() const;
};

enum class TriggerState { Neutral, SeenI };

struct RepEvent {
    std::size_t rep_index = 0;
    std::size_t pose_I_frame = 0;
    std::size_t pose_II_frame = 0;

    friend bool operator==(const RepEvent&, const RepEvent&) = default;
};

struct CountResult {
    std::size_t count = 0;
    std::vector<RepEvent> events;
    TriggerState final_state = TriggerState::Neutral;
};

const char* to_string(TriggerState state);

// Centered moving average; windows shrink to what is available at the ends.
std::vector<double> smooth(std::span<const double> scores, int window);

// Two-state hysteresis over the smoothed scores. A window longer than the map
// is reduced to the largest odd length that fits.
CountResult count_reps(const DensityMap& density, const TriggerConfig& config = {});

// `frame,score,valid` with six-decimal scores.
void write_density_csv(std::ostream& out, const DensityMap& density);
DensityMap read_density_csv(std::istream& in, std::string video_id = {}, std::string action = {});

}  // namespace repcount
