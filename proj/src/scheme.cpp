#include "dlab/scheme.hpp"

#include "dlab/error.hpp"

namespace dlab {

std::string_view to_string(Role role) { return role == Role::teacher ? "teacher" : "student"; }

std::string_view to_string(Group group) { return group == Group::human ? "human" : "ai"; }

std::string_view to_string(Dimension dimension) {
  switch (dimension) {
    case Dimension::initiation: return "Initiation";
    case Dimension::response: return "Response";
    case Dimension::feedback: return "Feedback";
  }
  return "";
}

std::optional<Role> parse_role(std::string_view text) {
  if (text == "teacher") return Role::teacher;
  if (text == "student") return Role::student;
  return std::nullopt;
}

std::optional<Group> parse_group(std::string_view text) {
  if (text == "human") return Group::human;
  if (text == "ai") return Group::ai;
  return std::nullopt;
}

std::pair<std::size_t, std::size_t> edge_pair(std::size_t edge, std::size_t k) {
  for (std::size_t i = 0; i + 1 < k; ++i) {
    const std::size_t row = k - i - 1;
    if (edge < row) return {i, i + 1 + edge};
    edge -= row;
  }
  throw DomainError("edge index out of range");
}

CodeScheme::CodeScheme(std::string name, std::string version, std::vector<CodeDef> codes)
    : name_(std::move(name)), version_(std::move(version)), codes_(std::move(codes)) {
  for (std::size_t i = 0; i < codes_.size(); ++i) {
    const CodeDef& def = codes_[i];
    if (def.id.empty()) throw SchemaError(name_, "code " + std::to_string(i) + " has an empty id");
    if (!index_.emplace(def.id, i).second) throw SchemaError(name_, "duplicate code id '" + def.id + "'");
    const Role expected = def.dimension == Dimension::response ? Role::student : Role::teacher;
    if (def.role_constraint != expected)
      throw SchemaError(name_, "code '" + def.id + "' must be a " + std::string(to_string(expected)) +
                                   " move");
  }
}

std::optional<std::size_t> CodeScheme::index_of(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const CodeDef& CodeScheme::at(std::string_view id) const {
  auto index = index_of(id);
  if (!index) throw SchemaError(name_, "unknown code '" + std::string(id) + "'");
  return codes_[*index];
}

const CodeScheme& scheme_default() {
  static const CodeScheme scheme(
      "IRF", "1",
      {
          {"I-Q", Dimension::initiation, Role::teacher, "Questioning",
           "Involves asking students questions that require an active linguistic and cognitive answer.",
           "What is 5+3? How did you get the answer?"},
          {"I-H", Dimension::initiation, Role::teacher, "Hints",
           "The teacher provides clues or suggestions to help the student progress, without giving the "
           "full solution.",
           "We need to find the grandfather's age. We know the age difference between the father and Tom, "
           "and between the grandfather and the father. How can we use this information?"},
          {"I-M", Dimension::initiation, Role::teacher, "Modeling",
           "The process of offering a behavior for imitation, such as demonstrating a skill.",
           "I will show you how to solve this vertical equation."},
          {"R-RR", Dimension::response, Role::student, "Refuse to Response",
           "Refusing to answer or remaining silent.", "\"I don't know,\" or silence."},
          {"R-SR", Dimension::response, Role::student, "Simplistic Response",
           "A simple answer that lacks depth.", "\"Yeah,\" \"mm,\" or \"okay.\""},
          {"R-FR", Dimension::response, Role::student, "Factual Response",
           "An answer that is factual, based on memory, or explanatory.",
           "The sum of a triangle's interior angles is 180 degrees."},
          {"R-IO", Dimension::response, Role::student, "Interpretive/Open-ended",
           "A thorough answer that includes interpretation or explanation.",
           "I think we should first find the location of 1, and then calculate the coordinates for 1/3."},
          {"F-F", Dimension::feedback, Role::teacher, "Feeding Back",
           "Providing information to the student about their own performance.",
           "\"Good job,\" or \"That's smart.\""},
          {"F-I", Dimension::feedback, Role::teacher, "Instructing",
           "The teacher tells the student what to do or explains how/why something must be done.",
           "Tom is 5, and the age difference is 30, so the father is 35. The grandfather is 30 years "
           "older, so his age is 35+30."},
          {"F-E", Dimension::feedback, Role::teacher, "Explaining",
           "The teacher provides more detailed information or clarification.",
           "The sum of a triangle's angles is 180°. Since the other two angles are 30° and 60°, the third "
           "angle must be 90°."},
      });
  return scheme;
}

}  // namespace dlab
