#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace llmgrop
{
    /// Base class for every error raised by the library.
    class Error : public std::runtime_error
    {
      public:
        explicit Error (const std::string &what) : std::runtime_error (what) {}
    };

    // scene

    class SceneParseError : public Error
    {
      public:
        SceneParseError (const std::string &what, std::size_t line) : Error (what), line_ (line) {}
        std::size_t line () const noexcept { return line_; }

      private:
        std::size_t line_;
    };

    class DuplicateName : public Error
    {
      public:
        explicit DuplicateName (std::string name) : Error ("duplicate name: " + name), name_ (std::move (name)) {}
        const std::string &name () const noexcept { return name_; }

      private:
        std::string name_;
    };

    class InvalidScene : public Error
    {
      public:
        InvalidScene (std::string entity, const std::string &what)
            : Error (entity + ": " + what), entity_ (std::move (entity))
        {
        }
        const std::string &entity () const noexcept { return entity_; }

      private:
        std::string entity_;
    };

    // relations

    class UnknownObject : public Error
    {
      public:
        explicit UnknownObject (std::string name) : Error ("unknown object: " + name), name_ (std::move (name)) {}
        const std::string &name () const noexcept { return name_; }

      private:
        std::string name_;
    };

    class InvalidRelation : public Error
    {
      public:
        using Error::Error;
    };

    class CyclicStacking : public Error
    {
      public:
        using Error::Error;
    };

    // oracle

    class NoParse : public Error
    {
      public:
        using Error::Error;
    };

    class InvalidQuery : public Error
    {
      public:
        using Error::Error;
    };

    class BackendError : public Error
    {
      public:
        using Error::Error;
    };

    class ExhaustedRetries : public Error
    {
      public:
        ExhaustedRetries (const std::string &what, std::vector<std::string> transcripts)
            : Error (what), transcripts_ (std::move (transcripts))
        {
        }
        const std::vector<std::string> &transcripts () const noexcept { return transcripts_; }

      private:
        std::vector<std::string> transcripts_;
    };

    // grounding

    class EmptyRelationSet : public Error
    {
      public:
        EmptyRelationSet () : Error ("relation set is empty") {}
    };

    class Disconnected : public Error
    {
      public:
        explicit Disconnected (std::string object)
            : Error ("object not reachable from anchor: " + object), object_ (std::move (object))
        {
        }
        const std::string &object () const noexcept { return object_; }

      private:
        std::string object_;
    };

    class MissingDistance : public Error
    {
      public:
        using Error::Error;
    };

    class IllegalStacking : public Error
    {
      public:
        using Error::Error;
    };

    class NoValidConfiguration : public Error
    {
      public:
        using Error::Error;
    };

    // tamp

    class NoFreePose : public Error
    {
      public:
        using Error::Error;
    };

    class Unreachable : public Error
    {
      public:
        using Error::Error;
    };

    class Infeasible : public Error
    {
      public:
        explicit Infeasible (std::string object)
            : Error ("no feasible standing pose for object: " + object), object_ (std::move (object))
        {
        }
        const std::string &object () const noexcept { return object_; }

      private:
        std::string object_;
    };

    class AllInfeasible : public Error
    {
      public:
        using Error::Error;
    };

    /// Wraps a pipeline failure with the stage it came from.
    class StageError : public Error
    {
      public:
        StageError (std::string stage, const std::string &what)
            : Error (stage + ": " + what), stage_ (std::move (stage))
        {
        }
        const std::string &stage () const noexcept { return stage_; }

      private:
        std::string stage_;
    };
} // namespace llmgrop
