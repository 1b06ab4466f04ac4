// Replacement global allocation functions that report every block to the
// allocation tracker. Link this file into an executable to enable
// peak-memory probing; it must not be part of a shared library.

#include <malloc.h>

#include <cstdlib>
#include <new>

#include "effeval/effeval.h"

namespace {

void* tracked_alloc(std::size_t size) {
  void* p = std::malloc(size == 0 ? 1 : size);
  if (p != nullptr) effeval_tracker_note_alloc(malloc_usable_size(p));
  return p;
}

void* tracked_aligned_alloc(std::size_t size, std::align_val_t align) {
  const auto a = static_cast<std::size_t>(align);
  void* p = nullptr;
  if (posix_memalign(&p, a < sizeof(void*) ? sizeof(void*) : a, size == 0 ? 1 : size) != 0) {
    return nullptr;
  }
  effeval_tracker_note_alloc(malloc_usable_size(p));
  return p;
}

void tracked_free(void* p) noexcept {
  if (p == nullptr) return;
  effeval_tracker_note_free(malloc_usable_size(p));
  std::free(p);
}

struct Installer {
  Installer() { effeval_tracker_install(); }
} installer;

}  // namespace

void* operator new(std::size_t size) {
  if (void* p = tracked_alloc(size)) return p;
  throw std::bad_alloc();
}

void* operator new[](std::size_t size) {
  if (void* p = tracked_alloc(size)) return p;
  throw std::bad_alloc();
}

void* operator new(std::size_t size, const std::nothrow_t&) noexcept { return tracked_alloc(size); }
void* operator new[](std::size_t size, const std::nothrow_t&) noexcept { return tracked_alloc(size); }

void* operator new(std::size_t size, std::align_val_t align) {
  if (void* p = tracked_aligned_alloc(size, align)) return p;
  throw std::bad_alloc();
}

void* operator new[](std::size_t size, std::align_val_t align) {
  if (void* p = tracked_aligned_alloc(size, align)) return p;
  throw std::bad_alloc();
}

void operator delete(void* p) noexcept { tracked_free(p); }
void operator delete[](void* p) noexcept { tracked_free(p); }
void operator delete(void* p, std::size_t) noexcept { tracked_free(p); }
void operator delete[](void* p, std::size_t) noexcept { tracked_free(p); }
void operator delete(void* p, std::align_val_t) noexcept { tracked_free(p); }
void operator delete[](void* p, std::align_val_t) noexcept { tracked_free(p); }
void operator delete(void* p, std::size_t, std::align_val_t) noexcept { tracked_free(p); }
void operator delete[](void* p, std::size_t, std::align_val_t) noexcept { tracked_free(p); }
