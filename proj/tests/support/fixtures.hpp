#pragma once

#include <llmgrop/oracle.hpp>
#include <llmgrop/scene.hpp>

#include <string>

namespace fixtures
{
    inline std::string data_path (const std::string &rel) { return std::string (LLMGROP_DATA_DIR) + "/" + rel; }

    inline llmgrop::Scene task (int id) { return llmgrop::load_scene (data_path ("tasks/task" + std::to_string (id) + ".json")); }

    inline const llmgrop::StaticTable &static_table ()
    {
        static const llmgrop::StaticTable t = llmgrop::StaticTable::load (data_path ("data/static_table.json"));
        return t;
    }

    inline llmgrop::StaticBackend static_backend () { return llmgrop::StaticBackend (static_table ()); }
} // namespace fixtures
