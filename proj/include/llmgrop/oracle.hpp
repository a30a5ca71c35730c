#pragma once
/**
 * @file
 * @brief Language-model oracle: prompt rendering for the arrangement and
 *        distance templates, response parsing, pluggable completion backends,
 *        and the query-parse-check retry loop.
 */

#include <llmgrop/error.hpp>
#include <llmgrop/relations.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace llmgrop
{
    enum class OracleBackend
    {
        Static,
        Replay,
        Http
    };

    /// Completion parameters (defaults: text-davinci-003, near-greedy decoding).
    struct OracleConfig
    {
        OracleBackend backend = OracleBackend::Static;
        std::string model = "text-davinci-003";
        double temperature = 0.1;
        double top_p = 1.0;
        int max_length = 512;
        double frequency_penalty = 0.0;
        double presence_penalty = 0.0;
        int max_retry = 5;
        double timeout = 30.0;
    };

    inline constexpr std::string_view kDefaultNotes =
        "Each action should be on a separate line starting with 'Place'. The answer cannot include other objects.";

    struct SymbolicQuery
    {
        std::vector<std::string> objects;
        /// Few-shot block; absent means zero-shot.
        std::optional<std::string> examples;
        /// Output constraints; absent means kDefaultNotes, empty means none.
        std::optional<std::string> notes;
        std::vector<RelationKind> vocabulary{kAllRelationKinds.begin (), kAllRelationKinds.end ()};
    };

    struct DistanceQuery
    {
        std::string subject;
        RelationKind kind = RelationKind::LeftOf;
        std::string anchor;
    };

    struct DistanceAnswer
    {
        double low = 0.0;
        double high = 0.0;
        double midpoint = 0.0;
    };

    namespace detail
    {
        inline std::string lower (std::string s)
        {
            std::transform (s.begin (), s.end (), s.begin (), [] (unsigned char c) { return std::tolower (c); });
            return s;
        }

        inline std::string trim (std::string_view s)
        {
            const auto b = s.find_first_not_of (" \t\r\n");
            if (b == std::string_view::npos)
                return {};
            const auto e = s.find_last_not_of (" \t\r\n");
            return std::string (s.substr (b, e - b + 1));
        }

        inline std::string_view article (std::string_view noun)
        {
            if (noun.empty ())
                return "a";
            const char c = static_cast<char> (std::tolower (static_cast<unsigned char> (noun.front ())));
            return std::string_view ("aeiou").find (c) != std::string_view::npos ? "an" : "a";
        }

        inline std::string capitalize (std::string s)
        {
            if (!s.empty ())
                s[0] = static_cast<char> (std::toupper (static_cast<unsigned char> (s[0])));
            return s;
        }

        inline std::string strip_article (std::string s)
        {
            for (std::string_view a : {"the ", "a ", "an "})
                if (s.size () > a.size () && lower (s.substr (0, a.size ())) == a)
                    return trim (s.substr (a.size ()));
            return s;
        }

        inline std::string format_number (double v)
        {
            std::ostringstream os;
            os << v;
            return os.str ();
        }
    } // namespace detail

    /// Arrangement prompt. Pure: identical queries give byte-identical text.
    inline std::string render_template1 (const SymbolicQuery &q)
    {
        if (q.objects.empty ())
            throw InvalidQuery ("symbolic query needs at least one object");
        std::string vocab;
        for (std::size_t i = 0; i < q.vocabulary.size (); ++i)
        {
            if (i)
                vocab += ", ";
            vocab += phrase (q.vocabulary[i]);
        }
        std::string objects;
        for (std::size_t i = 0; i < q.objects.size (); ++i)
        {
            if (i)
                objects += ", ";
            objects += std::string (detail::article (q.objects[i])) + " " + q.objects[i];
        }
        std::string out = "The goal is to set a dining table with objects. The symbolic spatial relationship between objects includes " +
                          vocab + ". ";
        if (q.examples && !q.examples->empty ())
        {
            out += *q.examples;
            if (q.examples->back () != '.')
                out += ".";
            out += " ";
        }
        out += "What is a typical way of positioning " + objects + " on a table?";
        const std::string notes = q.notes ? *q.notes : std::string (kDefaultNotes);
        if (!notes.empty ())
            out += " " + notes;
        return out;
    }

    /// Distance prompt. Stacking and table-center relations carry no distance and are rejected.
    inline std::string render_template2 (const DistanceQuery &q)
    {
        if (q.kind == RelationKind::OnTopOf || q.kind == RelationKind::CenterOfTable)
            throw InvalidQuery ("no distance query for " + std::string (to_string (q.kind)));
        if (q.subject.empty () || q.anchor.empty ())
            throw InvalidQuery ("distance query needs subject and anchor");
        const std::string rel (phrase (q.kind));
        return detail::capitalize (std::string (detail::article (q.subject))) + " " + q.subject + " is placed " + rel + " " +
               std::string (detail::article (q.anchor)) + " " + q.anchor + ". How many centimeters " + rel + " the " +
               q.anchor + " should the " + q.subject + " be placed?";
    }

    /// Render relations as the Place-lines an LLM is asked to produce.
    inline std::string format_place_lines (const RelationSet &rs)
    {
        std::string out;
        for (const auto &r : rs.relations ())
            out += "Place " + describe (r) + ".\n";
        return out;
    }

    struct PlaceParse
    {
        RelationSet relations;
        /// Non-empty lines that did not parse as a Place action.
        std::vector<std::string> unmatched;
    };

    /**
     * @brief Parse "Place <object> <relation phrase> <anchor>" lines.
     *
     * Matching is line-anchored and case-insensitive; list numbering, bullets,
     * articles and trailing punctuation are ignored. When `allowed` is given,
     * names are canonicalized to it and any other name raises UnknownObject.
     *
     * @throws NoParse when no line parses.
     */
    inline PlaceParse parse_place_lines (const std::string &text, const std::optional<std::vector<std::string>> &allowed = std::nullopt)
    {
        static const std::regex prefix (R"(^\s*(?:\d+\s*[.):]|[-*•])\s*)");
        static const std::regex center (R"(^(.+?)\s+in\s+the\s+cent(?:er|re)\s+of\s+(?:the\s+)?table$)");

        // Longest phrase first so composites win over their suffixes.
        std::vector<RelationKind> kinds;
        for (RelationKind k : kAllRelationKinds)
            if (k != RelationKind::CenterOfTable)
                kinds.push_back (k);
        std::stable_sort (kinds.begin (), kinds.end (),
                          [] (RelationKind a, RelationKind b) { return phrase (a).size () > phrase (b).size (); });

        auto canonical = [&allowed] (std::string name) {
            name = detail::strip_article (detail::trim (name));
            if (!allowed)
                return detail::lower (name);
            for (const auto &a : *allowed)
                if (detail::lower (a) == detail::lower (name))
                    return a;
            throw UnknownObject (name);
        };

        std::vector<Relation> parsed;
        PlaceParse out;
        std::istringstream in (text);
        std::string raw;
        while (std::getline (in, raw))
        {
            std::string line = std::regex_replace (detail::trim (raw), prefix, "");
            while (!line.empty () && std::string_view (".;,!").find (line.back ()) != std::string_view::npos)
                line.pop_back ();
            line = detail::trim (line);
            if (line.empty ())
                continue;
            const std::string low = detail::lower (line);
            if (low.rfind ("place ", 0) != 0)
            {
                out.unmatched.push_back (raw);
                continue;
            }
            const std::string body = low.substr (6);
            std::smatch m;
            if (std::regex_match (body, m, center))
            {
                parsed.push_back ({canonical (line.substr (6, m.length (1))), RelationKind::CenterOfTable, {}});
                continue;
            }
            bool matched = false;
            for (RelationKind k : kinds)
            {
                const std::string needle = " " + std::string (phrase (k)) + " ";
                const auto pos = body.find (needle);
                if (pos == std::string::npos || pos == 0)
                    continue;
                const std::string subject = line.substr (6, pos);
                const std::string anchor = line.substr (6 + pos + needle.size ());
                if (detail::trim (anchor).empty ())
                    continue;
                parsed.push_back ({canonical (subject), k, canonical (anchor)});
                matched = true;
                break;
            }
            if (!matched)
                out.unmatched.push_back (raw);
        }
        if (parsed.empty ())
            throw NoParse ("no Place line could be parsed");
        out.relations = allowed ? RelationSet (std::move (parsed), *allowed) : RelationSet (std::move (parsed));
        return out;
    }

    /**
     * @brief Extract the first centimeter quantity ("5-7 centimeters", "10 cm").
     * @throws NoParse if the text contains none.
     */
    inline DistanceAnswer parse_distance (const std::string &text)
    {
        static const std::regex range (R"((\d+(?:\.\d+)?)\s*(?:-|–|to)\s*(\d+(?:\.\d+)?)\s*(?:centimet(?:er|re)s?|cm)\b)",
                                       std::regex::icase);
        static const std::regex single (R"((\d+(?:\.\d+)?)\s*(?:centimet(?:er|re)s?|cm)\b)", std::regex::icase);
        std::smatch mr, ms;
        const bool has_range = std::regex_search (text, mr, range);
        const bool has_single = std::regex_search (text, ms, single);
        DistanceAnswer a;
        if (has_range && (!has_single || mr.position (0) <= ms.position (0)))
        {
            a.low = std::stod (mr[1].str ());
            a.high = std::stod (mr[2].str ());
            if (a.low > a.high)
                std::swap (a.low, a.high);
        }
        else if (has_single)
            a.low = a.high = std::stod (ms[1].str ());
        else
            throw NoParse ("no centimeter quantity in response");
        if (!(a.low > 0.0))
            throw NoParse ("distance must be positive");
        a.midpoint = 0.5 * (a.low + a.high);
        return a;
    }

    /// A text-completion backend.
    class LanguageModel
    {
      public:
        virtual ~LanguageModel () = default;
        virtual std::string complete (const std::string &prompt) = 0;
    };

    /**
     * @brief Curated commonsense answers keyed by object set and relation triple.
     *
     * Not ground truth: the entries are configuration chosen for reproducible
     * experiments. Distances are center-to-center.
     */
    struct StaticTable
    {
        /// Sorted lower-case object names -> Place-lines response.
        std::map<std::vector<std::string>, std::string> arrangements;
        std::map<Relation, DistanceAnswer> distances;

        static StaticTable from_json (const nlohmann::json &j)
        {
            StaticTable t;
            for (const auto &a : j.at ("arrangements"))
            {
                std::vector<std::string> objs;
                for (const auto &o : a.at ("objects"))
                    objs.push_back (detail::lower (o.get<std::string> ()));
                std::sort (objs.begin (), objs.end ());
                t.arrangements[objs] = a.at ("response").get<std::string> ();
            }
            for (const auto &d : j.at ("distances"))
            {
                Relation r = relation_from_json (d);
                r.subject = detail::lower (r.subject);
                r.anchor = detail::lower (r.anchor);
                const double lo = d.at ("low_cm").get<double> (), hi = d.at ("high_cm").get<double> ();
                t.distances[r] = {lo, hi, 0.5 * (lo + hi)};
            }
            return t;
        }

        static StaticTable load (const std::string &path)
        {
            std::ifstream in (path);
            if (!in)
                throw Error ("cannot open static table: " + path);
            try
            {
                return from_json (nlohmann::json::parse (in));
            }
            catch (const nlohmann::json::exception &e)
            {
                throw Error ("static table " + path + ": " + e.what ());
            }
        }
    };

    /// Deterministic backend answering both templates from a StaticTable.
    class StaticBackend final : public LanguageModel
    {
      public:
        explicit StaticBackend (StaticTable table) : table_ (std::move (table)) {}

        std::string complete (const std::string &prompt) override
        {
            static const std::regex t1 (R"(What is a typical way of positioning (.+?) on a table\?)");
            static const std::regex t2 (
                R"(^an? (.+?) is placed (to the left of|to the right of|above and to the left of|above and to the right of|below and to the left of|below and to the right of|above|below) an? (.+?)\. How many centimeters)",
                std::regex::icase);
            std::smatch m;
            if (std::regex_search (prompt, m, t1))
            {
                std::vector<std::string> objs;
                std::string list = m[1].str ();
                std::size_t start = 0;
                while (start <= list.size ())
                {
                    const auto comma = list.find (", ", start);
                    const auto end = comma == std::string::npos ? list.size () : comma;
                    objs.push_back (detail::lower (detail::strip_article (detail::trim (list.substr (start, end - start)))));
                    if (comma == std::string::npos)
                        break;
                    start = comma + 2;
                }
                std::sort (objs.begin (), objs.end ());
                if (auto it = table_.arrangements.find (objs); it != table_.arrangements.end ())
                    return it->second;
                return "I am not sure how to arrange these objects.";
            }
            if (std::regex_search (prompt, m, t2))
            {
                const std::string subject = detail::lower (m[1].str ());
                const std::string anchor = detail::lower (m[3].str ());
                const std::string rel = detail::lower (m[2].str ());
                for (RelationKind k : kAllRelationKinds)
                    if (phrase (k) == rel)
                        if (auto it = table_.distances.find ({subject, k, anchor}); it != table_.distances.end ())
                            return "Generally, the " + subject + " should be placed about " +
                                   detail::format_number (it->second.low) + "-" + detail::format_number (it->second.high) +
                                   " centimeters " + rel + " the " + anchor + ".";
                return "It depends on the size of the objects.";
            }
            return "I do not understand the question.";
        }

      private:
        StaticTable table_;
    };

    /// Replays recorded responses in order, regardless of the prompt.
    class ReplayBackend final : public LanguageModel
    {
      public:
        explicit ReplayBackend (std::vector<std::string> responses) : responses_ (std::move (responses)) {}

        static ReplayBackend load (const std::string &path)
        {
            std::ifstream in (path);
            if (!in)
                throw Error ("cannot open replay fixture: " + path);
            try
            {
                return ReplayBackend (nlohmann::json::parse (in).get<std::vector<std::string>> ());
            }
            catch (const nlohmann::json::exception &e)
            {
                throw Error ("replay fixture " + path + ": " + e.what ());
            }
        }

        std::string complete (const std::string &) override
        {
            if (next_ >= responses_.size ())
                throw BackendError ("replay fixture exhausted after " + std::to_string (responses_.size ()) + " responses");
            return responses_[next_++];
        }

        std::size_t consumed () const noexcept { return next_; }

      private:
        std::vector<std::string> responses_;
        std::size_t next_ = 0;
    };

    using ConsistencyChecker = std::function<ConsistencyVerdict (const RelationSet &)>;

    struct GenerationResult
    {
        RelationSet relations;
        int attempts = 0;
        std::vector<std::string> transcripts;
    };

    /**
     * @brief Query the arrangement template until a response parses, mentions
     *        every object as a subject, and passes the consistency checker.
     * @throws ExhaustedRetries after cfg.max_retry failed attempts.
     */
    inline GenerationResult generate_consistent_relations (const std::vector<std::string> &objects, LanguageModel &model,
                                                           const OracleConfig &cfg,
                                                           const ConsistencyChecker &checker = check_consistency)
    {
        if (objects.empty ())
            throw InvalidQuery ("no objects to arrange");
        if (cfg.max_retry < 1)
            throw InvalidQuery ("max_retry must be at least 1");
        SymbolicQuery query;
        query.objects = objects;
        const std::string prompt = render_template1 (query);
        GenerationResult out;
        for (int attempt = 1; attempt <= cfg.max_retry; ++attempt)
        {
            const std::string response = model.complete (prompt);
            std::string rejection;
            try
            {
                PlaceParse p = parse_place_lines (response, objects);
                std::set<std::string> subjects;
                for (const auto &r : p.relations.relations ())
                    subjects.insert (r.subject);
                for (const auto &o : objects)
                    if (!subjects.count (o))
                    {
                        rejection = "object never placed: " + o;
                        break;
                    }
                if (rejection.empty ())
                {
                    const ConsistencyVerdict v = checker (p.relations);
                    if (v.consistent)
                    {
                        out.relations = std::move (p.relations);
                        out.attempts = attempt;
                        out.transcripts.push_back (response);
                        return out;
                    }
                    rejection = v.conflict ? v.conflict->explanation : "inconsistent";
                }
            }
            catch (const NoParse &e)
            {
                rejection = e.what ();
            }
            catch (const UnknownObject &e)
            {
                rejection = e.what ();
            }
            catch (const InvalidRelation &e)
            {
                rejection = e.what ();
            }
            out.transcripts.push_back (response + "\n-- rejected: " + rejection);
        }
        throw ExhaustedRetries ("no consistent arrangement after " + std::to_string (cfg.max_retry) + " attempts",
                                std::move (out.transcripts));
    }

    /// Ask the distance template for every relation that carries a distance.
    inline std::map<Relation, DistanceAnswer> query_distances (const RelationSet &rs, LanguageModel &model, const OracleConfig &cfg)
    {
        std::map<Relation, DistanceAnswer> out;
        for (const auto &r : rs.relations ())
        {
            if (r.kind == RelationKind::OnTopOf || r.kind == RelationKind::CenterOfTable)
                continue;
            const std::string prompt = render_template2 ({r.subject, r.kind, r.anchor});
            std::vector<std::string> transcripts;
            for (int attempt = 1; attempt <= cfg.max_retry; ++attempt)
            {
                const std::string response = model.complete (prompt);
                try
                {
                    out[r] = parse_distance (response);
                    break;
                }
                catch (const NoParse &)
                {
                    transcripts.push_back (response);
                }
            }
            if (!out.count (r))
                throw ExhaustedRetries ("no distance for " + describe (r), std::move (transcripts));
        }
        return out;
    }

    /// Nominal distances in centimeters (range midpoints).
    inline std::map<Relation, double> midpoints (const std::map<Relation, DistanceAnswer> &answers)
    {
        std::map<Relation, double> out;
        for (const auto &[r, a] : answers)
            out[r] = a.midpoint;
        return out;
    }
} // namespace llmgrop
