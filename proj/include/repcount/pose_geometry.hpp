#pragma once

#include <array>
#include <cstddef>
#include <string_view>
#include <vector>

namespace repcount {

inline constexpr std::size_t kNumLandmarks = 33;
inline constexpr std::size_t kCoordDim = kNumLandmarks * 3;

// BlazePose topology indices used by the angle triplets and the synthesizer.
namespace lm {
inline constexpr int kNose = 0;
inline constexpr int kLeftEyeInner = 1;
inline constexpr int kLeftEye = 2;
inline constexpr int kLeftEyeOuter = 3;
inline constexpr int kRightEyeInner = 4;
inline constexpr int kRightEye = 5;
inline constexpr int kRightEyeOuter = 6;
inline constexpr int kLeftEar = 7;
inline constexpr int kRightEar = 8;
inline constexpr int kMouthLeft = 9;
inline constexpr int kMouthRight = 10;
inline constexpr int kLeftShoulder = 11;
inline constexpr int kRightShoulder = 12;
inline constexpr int kLeftElbow = 13;
inline constexpr int kRightElbow = 14;
inline constexpr int kLeftWrist = 15;
inline constexpr int kRightWrist = 16;
inline constexpr int kLeftPinky = 17;
inline constexpr int kRightPinky = 18;
inline constexpr int kLeftIndex = 19;
inline constexpr int kRightIndex = 20;
inline constexpr int kLeftThumb = 21;
inline constexpr int kRightThumb = 22;
inline constexpr int kLeftHip = 23;
inline constexpr int kRightHip = 24;
inline constexpr int kLeftKnee = 25;
inline constexpr int kRightKnee = 26;
inline constexpr int kLeftAnkle = 27;
inline constexpr int kRightAnkle = 28;
inline constexpr int kLeftHeel = 29;
inline constexpr int kRightHeel = 30;
inline constexpr int kLeftFootIndex = 31;
inline constexpr int kRightFootIndex = 32;
}  // namespace lm

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend Vec3 operator*(double s, Vec3 v) { return {s * v.x, s * v.y, s * v.z}; }
    friend bool operator==(const Vec3&, const Vec3&) = default;
};

double dot(Vec3 a, Vec3 b);
double norm(Vec3 v);

struct Landmark {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    double visibility = 1.0;

    Vec3 position() const { return {x, y, z}; }
    friend bool operator==(const Landmark&, const Landmark&) = default;
};

struct LandmarkFrame {
    long frame_index = 0;
    double timestamp_ms = -1.0;  // -1 when the source had no timestamp
    std::array<Landmark, kNumLandmarks> landmarks{};

    friend bool operator==(const LandmarkFrame&, const LandmarkFrame&) = default;
};

enum class Side { Left, Right, Average };

enum class Joint { Elbow, Shoulder, Hip, Knee, Ankle };

inline constexpr std::array<Joint, 5> kJoints = {Joint::Elbow, Joint::Shoulder, Joint::Hip, Joint::Knee,
                                                 Joint::Ankle};

std::string_view to_string(Joint joint);
std::string_view to_string(Side side);

// Degrees, one value per joint, ordered elbow, shoulder, hip, knee, ankle.
struct AngleSet {
    double elbow_deg = 0.0;
    double shoulder_deg = 0.0;
    double hip_deg = 0.0;
    double knee_deg = 0.0;
    double ankle_deg = 0.0;
    Side side = Side::Left;

    double get(Joint joint) const;
    void set(Joint joint, double degrees);
    std::array<double, 5> values() const;

    friend bool operator==(const AngleSet&, const AngleSet&) = default;
};

enum class FeatureMode { LandmarksOnly, LandmarksLeft5, LandmarksLR10, LandmarksAvg5 };

inline constexpr std::array<FeatureMode, 4> kFeatureModes = {FeatureMode::LandmarksOnly, FeatureMode::LandmarksLeft5,
                                                             FeatureMode::LandmarksLR10, FeatureMode::LandmarksAvg5};

std::size_t feature_dim(FeatureMode mode);

// CLI spelling: landmarks | left5 | lr10 | avg5.
std::string_view to_string(FeatureMode mode);
FeatureMode parse_feature_mode(std::string_view name);

struct FeatureVector {
    FeatureMode mode = FeatureMode::LandmarksOnly;
    std::vector<double> values;

    std::size_t dim() const { return values.size(); }
    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

// Vertex is the middle landmark; the angle is measured between the rays to
// `proximal` and `distal`.
struct Triplet {
    int proximal = 0;
    int vertex = 0;
    int distal = 0;
};

// Left-side triplets. The right side uses the same triplets shifted by +1,
// which is how BlazePose pairs left/right landmarks.
struct JointTriplets {
    Triplet elbow{lm::kLeftShoulder, lm::kLeftElbow, lm::kLeftWrist};
    Triplet shoulder{lm::kLeftElbow, lm::kLeftShoulder, lm::kLeftHip};
    Triplet hip{lm::kLeftShoulder, lm::kLeftHip, lm::kLeftKnee};
    Triplet knee{lm::kLeftHip, lm::kLeftKnee, lm::kLeftAnkle};
    Triplet ankle{lm::kLeftKnee, lm::kLeftAnkle, lm::kLeftFootIndex};

    const Triplet& get(Joint joint) const;
    Triplet for_side(Joint joint, Side side) const;
};

struct GeometryConfig {
    JointTriplets triplets;
    double visibility_threshold = 0.3;
    // When false the z coordinate is zeroed both in the coordinate block of the
    // feature vector and in the angle computation. Dimensions are unchanged.
    bool use_z = true;

    // Swaps the ankle's distal landmark between foot index (default) and heel.
    void use_heel_for_ankle(bool heel);
};

inline constexpr double kMinSegmentLength = 1e-9;

// Interior angle at `b` in degrees. Throws DegenerateSegment when either
// segment is shorter than kMinSegmentLength.
double compute_joint_angle(Vec3 a, Vec3 b, Vec3 c);

AngleSet five_joint_angles(const LandmarkFrame& frame, Side side, const GeometryConfig& config = {});

AngleSet average_angles(const AngleSet& left, const AngleSet& right);

// Landmarks whose visibility gates whether a frame is usable: every landmark
// referenced by the left or right triplets.
std::vector<int> required_landmarks(const GeometryConfig& config = {});

bool frame_is_valid(const LandmarkFrame& frame, const GeometryConfig& config = {});

// 99 flattened coordinates (landmark-major, x,y,z) followed by the mode's
// angles divided by 180. LR10 lays out the five left angles, then the five
// right angles.
FeatureVector assemble_features(const LandmarkFrame& frame, FeatureMode mode, const GeometryConfig& config = {});

}  // namespace repcount
