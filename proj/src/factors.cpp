#include "factts/factors.hpp"

#include "factts/errors.hpp"

namespace factts {

std::string to_string(ArchKind k) {
    switch (k) {
        case ArchKind::pm: return "pm";
        case ArchKind::sm_se: return "sm_se";
        case ArchKind::sm_es: return "sm_es";
        case ArchKind::aim: return "aim";
        case ArchKind::pm_aim: return "pm_aim";
        case ArchKind::sm_se_aim: return "sm_se_aim";
        case ArchKind::sm_es_aim: return "sm_es_aim";
        case ArchKind::sed: return "sed";
    }
    throw Error("unreachable arch kind");
}

ArchKind arch_from_string(const std::string& s) {
    if (s == "pm") return ArchKind::pm;
    if (s == "sm_se") return ArchKind::sm_se;
    if (s == "sm_es") return ArchKind::sm_es;
    if (s == "aim") return ArchKind::aim;
    if (s == "pm_aim") return ArchKind::pm_aim;
    if (s == "sm_se_aim") return ArchKind::sm_se_aim;
    if (s == "sm_es_aim") return ArchKind::sm_es_aim;
    if (s == "sed") return ArchKind::sed;
    throw InvalidConfig("unknown architecture: " + s);
}

std::string to_string(Placement p) {
    switch (p) {
        case Placement::input: return "input";
        case Placement::last_hidden: return "last_hidden";
        case Placement::output: return "output";
    }
    throw Error("unreachable placement");
}

EmotionIndex EmotionIndex::at(int one_based) {
    if (one_based < 1) throw InvalidFactorIndex("emotion index must be >= 1");
    return EmotionIndex(one_based);
}

int EmotionIndex::index() const {
    if (is_neutral()) throw InvalidState("neutral emotion has no index");
    return raw_;
}

EmotionId emotion_id(EmotionIndex which, int total_emotions) {
    if (total_emotions < 0) throw InvalidFactorIndex("emotion count must be >= 0");
    EmotionId id{Vector(static_cast<std::size_t>(total_emotions), 0.0)};
    if (!which.is_neutral()) {
        const int i = which.index();
        if (i > total_emotions)
            throw InvalidFactorIndex("emotion index " + std::to_string(i) +
                                     " out of range 1.." + std::to_string(total_emotions));
        id.values[static_cast<std::size_t>(i - 1)] = 1.0;
    }
    return id;
}

SpeakerId speaker_id(int speaker, int total_speakers) {
    if (total_speakers < 1) throw InvalidFactorIndex("speaker count must be >= 1");
    if (speaker < 1 || speaker > total_speakers)
        throw InvalidFactorIndex("speaker index " + std::to_string(speaker) +
                                 " out of range 1.." + std::to_string(total_speakers));
    SpeakerId id{Vector(static_cast<std::size_t>(total_speakers), 0.0)};
    id.values[static_cast<std::size_t>(speaker - 1)] = 1.0;
    return id;
}

namespace {

Vector concat_es(const EmotionId& e, const SpeakerId& s, bool shared_one) {
    Vector v;
    v.reserve(e.size() + s.size() + (shared_one ? 1 : 0));
    v.insert(v.end(), e.values.begin(), e.values.end());
    v.insert(v.end(), s.values.begin(), s.values.end());
    if (shared_one) v.push_back(1.0);
    return v;
}

Vector with_shared(const Vector& id) {
    Vector v = id;
    v.push_back(1.0);
    return v;
}

}  // namespace

bool has_aux(ArchKind arch, Placement where) {
    switch (arch) {
        case ArchKind::pm:
            return where == Placement::output;
        case ArchKind::sm_se:
        case ArchKind::sm_es:
            return where == Placement::last_hidden || where == Placement::output;
        case ArchKind::aim:
            return where == Placement::input;
        case ArchKind::pm_aim:
            return where == Placement::input || where == Placement::output;
        case ArchKind::sm_se_aim:
        case ArchKind::sm_es_aim:
            return true;
        case ArchKind::sed:
            return false;
    }
    return false;
}

AuxVector layer_aux(ArchKind arch, Placement where, const EmotionId& e, const SpeakerId& s) {
    if (!has_aux(arch, where))
        throw InvalidPlacement(to_string(arch) + " has no auxiliary vector at the " +
                               to_string(where) + " layer");
    switch (where) {
        case Placement::input:
            // AIM-style: [E; S] appended to the input features.
            return AuxVector{concat_es(e, s, false), where};
        case Placement::last_hidden:
            // Serial models factor one identity in the last hidden layer.
            if (arch == ArchKind::sm_se || arch == ArchKind::sm_se_aim)
                return AuxVector{with_shared(s.values), where};
            return AuxVector{with_shared(e.values), where};
        case Placement::output:
            if (arch == ArchKind::pm || arch == ArchKind::pm_aim)
                return AuxVector{concat_es(e, s, true), where};
            if (arch == ArchKind::sm_se || arch == ArchKind::sm_se_aim)
                return AuxVector{with_shared(e.values), where};
            return AuxVector{with_shared(s.values), where};
    }
    throw Error("unreachable placement");
}

}  // namespace factts
