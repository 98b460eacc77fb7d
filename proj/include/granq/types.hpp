#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <string_view>

#include <Eigen/Core>

namespace granq {

using real = double;

template <typename Scalar = real>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar = real>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using VectorXr = VectorX<real>;
using MatrixXr = MatrixX<real>;

// Dense handle for a node of one kind. Tag keeps tx and address handles apart.
template <typename Tag>
struct Handle {
  std::uint32_t value = std::numeric_limits<std::uint32_t>::max();

  constexpr Handle() = default;
  constexpr explicit Handle(std::uint32_t v) : value(v) {}
  constexpr explicit Handle(std::size_t v) : value(static_cast<std::uint32_t>(v)) {}
  constexpr explicit Handle(int v) : value(static_cast<std::uint32_t>(v)) {}

  constexpr std::size_t index() const { return value; }
  constexpr bool valid() const { return value != std::numeric_limits<std::uint32_t>::max(); }

  friend constexpr auto operator<=>(Handle, Handle) = default;
};

struct TxTag {};
struct AddrTag {};
using TxHandle = Handle<TxTag>;
using AddrHandle = Handle<AddrTag>;

using Timestep = int;

enum class Level { transaction, actor };
enum class Stage { raw, platt };
enum class Direction { input, output, both };
enum class Label : std::uint8_t { illicit = 1, licit = 2, unknown = 3 };

std::string_view to_string(Level level);
std::string_view to_string(Stage stage);
std::string_view to_string(Direction direction);
std::string_view to_string(Label label);

Level parse_level(std::string_view s);
Stage parse_stage(std::string_view s);
Direction parse_direction(std::string_view s);

}  // namespace granq

template <typename Tag>
struct std::hash<granq::Handle<Tag>> {
  std::size_t operator()(granq::Handle<Tag> h) const noexcept { return std::hash<std::uint32_t>{}(h.value); }
};
