#include <cstdlib>
#include <cstring>

#include "kernels_internal.hpp"

namespace shq::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(SHQ_WITH_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

bool scalar_forced() {
  const char* env = std::getenv("SHQ_FORCE_SCALAR");
  return env != nullptr && std::strcmp(env, "0") != 0 && env[0] != '\0';
}

const KernelTable& select() {
  if (scalar_forced()) return scalar_table();
  for (Isa isa : {Isa::Avx2, Isa::Neon}) {
    if (const KernelTable* t = table_for(isa)) return *t;
  }
  return scalar_table();
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

const KernelTable* table_for(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return &scalar_table();
    case Isa::Avx2:
#if defined(SHQ_WITH_AVX2)
      if (cpu_has_avx2()) return &avx2_table();
#endif
      return nullptr;
    case Isa::Neon:
#if defined(SHQ_WITH_NEON)
      return &neon_table();
#else
      return nullptr;
#endif
  }
  return nullptr;
}

const KernelTable& active() {
  static const KernelTable& table = select();
  return table;
}

std::vector<Isa> available() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
    if (table_for(isa) != nullptr) out.push_back(isa);
  }
  return out;
}

}  // namespace shq::kernels
