#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ksaqa {

// Strongly typed index into an Interner. Tag keeps entity and relation ids
// from mixing.
template <typename Tag>
struct Id {
  std::uint32_t value = 0;

  friend bool operator==(Id, Id) = default;
  friend auto operator<=>(Id, Id) = default;
};

struct EntityTag {};
struct RelationTag {};
using EntityId = Id<EntityTag>;
using RelationId = Id<RelationTag>;

struct StringHash {
  using is_transparent = void;
  std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
};

// Text <-> dense index map; ids are assigned in first-seen order.
template <typename IdType>
class Interner {
 public:
  IdType intern(std::string_view text) {
    if (auto it = index_.find(text); it != index_.end()) return it->second;
    const IdType id{static_cast<std::uint32_t>(texts_.size())};
    texts_.emplace_back(text);
    index_.emplace(texts_.back(), id);
    return id;
  }

  std::optional<IdType> find(std::string_view text) const {
    if (auto it = index_.find(text); it != index_.end()) return it->second;
    return std::nullopt;
  }

  const std::string& text(IdType id) const { return texts_.at(id.value); }
  std::size_t size() const { return texts_.size(); }
  const std::vector<std::string>& texts() const { return texts_; }

 private:
  std::vector<std::string> texts_;
  std::unordered_map<std::string, IdType, StringHash, std::equal_to<>> index_;
};

using EntityInterner = Interner<EntityId>;
using RelationInterner = Interner<RelationId>;

}  // namespace ksaqa

template <typename Tag>
struct std::hash<ksaqa::Id<Tag>> {
  std::size_t operator()(ksaqa::Id<Tag> id) const noexcept { return std::hash<std::uint32_t>{}(id.value); }
};
