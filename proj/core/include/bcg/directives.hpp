#pragma once

#include <string>
#include <vector>

#include "bcg/cemit.hpp"
#include "bcg/optimizer.hpp"
#include "bcg/trace.hpp"

namespace bcg {

/// Ordered persistent variables. The first insert of a name registers its
/// default (the static's initial value); later inserts store into it.
class PersistentPool {
 public:
  struct Entry {
    std::string name;
    MatValue default_value;
  };
  const std::vector<Entry>& entries() const { return entries_; }
  const Entry* find(std::string_view name) const;

 private:
  friend PersistentPool persistent_insert(TraceContext&, PersistentPool, const std::string&, const BVar&);
  std::vector<Entry> entries_;
};

/// Ordered function arguments.
class IoSeq {
 public:
  const std::vector<VarInfo>& entries() const { return entries_; }
  const VarInfo* find(std::string_view name) const;
  BVar get(TraceContext& ctx, std::string_view name) const;

 private:
  friend IoSeq inouts_insert(TraceContext&, IoSeq, const std::string&, const BVar&);
  std::vector<VarInfo> entries_;
};

TraceContext codegen_init();

/// Optimizes the recorded functions, drops unused statics and appends the
/// initialize function that resets every remaining static.
Program finalize_program(TraceContext& ctx, const OptOptions& opts = {}, const std::string& init_name = "initialize");
std::string codegen_finalize(TraceContext& ctx, const OptOptions& opts = {});

void start_function(TraceContext& ctx, const std::string& name, const IoSeq& io);
void end_function(TraceContext& ctx, const std::string& name);

PersistentPool persistent_create();
PersistentPool persistent_insert(TraceContext& ctx, PersistentPool pool, const std::string& name, const BVar& v);
BVar persistent_extract(TraceContext& ctx, const PersistentPool& pool, const std::string& name);

IoSeq inouts();
IoSeq inouts_insert(TraceContext& ctx, IoSeq io, const std::string& name, const BVar& v);

/// Stores v into an existing variable: block copy for two or more elements,
/// scalar assignment for one. Numeric matrices go through a local constant.
void store_into(TraceContext& ctx, const VarInfo& target, const BVar& v);

BVar constant(TraceContext& ctx, const MatValue& v, const std::string& name = {});
BVar expand(TraceContext& ctx, const BVar& in, std::size_t m, std::size_t n);
BVar bvarempty(TraceContext& ctx, const BVar& in);
BVar bvarcopy(TraceContext& ctx, const BVar& in);

void put_annotation(TraceContext& ctx, const std::string& text);
void code_insert(TraceContext& ctx, Instr in);

BVar if_exp(TraceContext& ctx, const BVar& cond, const BVar& e1, const BVar& e2);
/// 1-based selector over `choices`, lowered to nested if_exp.
BVar select_exp(TraceContext& ctx, const BVar& selector, const std::vector<BVar>& choices);
/// Structural conditional: calls f1 when in > 0, f2 otherwise.
void if_cos(TraceContext& ctx, const BVar& in, const CallTarget& f1, const CallTarget& f2);

}  // namespace bcg
