#include "convsat/features.hpp"

namespace convsat {

namespace {

struct TermWeight {
  const char* term;
  double weight;
};

// Bundled sentiment terms. Weights: 1.0 mild, 1.5 clear, 2.0 strong.
// Single tokens only; the scorer matches tokenized utterances.
const TermWeight kPositive[] = {
    {"good", 1.0},        {"great", 1.5},       {"awesome", 2.0},
    {"amazing", 2.0},     {"excellent", 2.0},   {"wonderful", 2.0},
    {"fantastic", 2.0},   {"love", 2.0},        {"loved", 2.0},
    {"loves", 2.0},       {"like", 1.0},        {"liked", 1.0},
    {"likes", 1.0},       {"enjoy", 1.5},       {"enjoyed", 1.5},
    {"enjoying", 1.5},    {"nice", 1.0},        {"cool", 1.0},
    {"fun", 1.5},         {"funny", 1.5},       {"happy", 1.5},
    {"glad", 1.5},        {"pleased", 1.5},     {"delighted", 2.0},
    {"thrilled", 2.0},    {"excited", 1.5},     {"exciting", 1.5},
    {"interesting", 1.0}, {"interested", 1.0},  {"fascinating", 1.5},
    {"smart", 1.0},       {"clever", 1.0},      {"brilliant", 2.0},
    {"perfect", 2.0},     {"best", 1.5},        {"better", 1.0},
    {"favorite", 1.5},    {"beautiful", 1.5},   {"lovely", 1.5},
    {"pleasant", 1.0},    {"sweet", 1.0},       {"kind", 1.0},
    {"friendly", 1.0},    {"helpful", 1.5},     {"useful", 1.0},
    {"thanks", 1.0},      {"thank", 1.0},       {"thankful", 1.5},
    {"grateful", 1.5},    {"appreciate", 1.5},  {"appreciated", 1.5},
    {"impressive", 1.5},  {"impressed", 1.5},   {"incredible", 2.0},
    {"superb", 2.0},      {"fabulous", 2.0},    {"terrific", 2.0},
    {"marvelous", 2.0},   {"splendid", 2.0},    {"outstanding", 2.0},
    {"magnificent", 2.0}, {"remarkable", 1.5},  {"extraordinary", 1.5},
    {"charming", 1.5},    {"delightful", 2.0},  {"enjoyable", 1.5},
    {"entertaining", 1.5},{"amusing", 1.0},     {"hilarious", 1.5},
    {"laugh", 1.0},       {"laughed", 1.0},     {"laughing", 1.0},
    {"smile", 1.0},       {"smiling", 1.0},     {"win", 1.0},
    {"winning", 1.0},     {"winner", 1.0},      {"success", 1.5},
    {"successful", 1.5},  {"victory", 1.5},     {"triumph", 1.5},
    {"celebrate", 1.5},   {"celebration", 1.5}, {"congratulations", 1.5},
    {"congrats", 1.5},    {"bravo", 1.5},       {"hooray", 1.5},
    {"yay", 1.5},         {"wow", 1.5},         {"neat", 1.0},
    {"rad", 1.0},         {"dope", 1.0},        {"lit", 1.0},
    {"stellar", 1.5},     {"superior", 1.0},    {"solid", 1.0},
    {"strong", 1.0},      {"reliable", 1.0},    {"trust", 1.0},
    {"trusted", 1.0},     {"honest", 1.0},      {"genuine", 1.0},
    {"authentic", 1.0},   {"fresh", 1.0},       {"vibrant", 1.0},
    {"lively", 1.0},      {"energetic", 1.0},   {"cheerful", 1.5},
    {"joy", 1.5},         {"joyful", 1.5},      {"bliss", 1.5},
    {"blissful", 1.5},    {"content", 1.0},     {"satisfied", 1.5},
    {"satisfying", 1.5},  {"satisfaction", 1.5},{"comfortable", 1.0},
    {"cozy", 1.0},        {"relaxed", 1.0},     {"relaxing", 1.0},
    {"calm", 1.0},        {"peaceful", 1.0},    {"soothing", 1.0},
    {"refreshing", 1.0},  {"inspiring", 1.5},   {"inspired", 1.5},
    {"uplifting", 1.5},   {"encouraging", 1.0}, {"supportive", 1.0},
    {"caring", 1.0},      {"thoughtful", 1.0},  {"generous", 1.0},
    {"gracious", 1.0},    {"polite", 1.0},      {"respectful", 1.0},
    {"admire", 1.5},      {"admirable", 1.5},   {"praise", 1.5},
    {"praised", 1.5},     {"recommend", 1.0},   {"recommended", 1.0},
    {"worthy", 1.0},      {"valuable", 1.0},    {"precious", 1.0},
    {"treasure", 1.0},    {"gem", 1.0},         {"masterpiece", 2.0},
    {"epic", 1.5},        {"legendary", 1.5},   {"iconic", 1.0},
    {"classic", 1.0},     {"top", 1.0},         {"ideal", 1.5},
    {"flawless", 2.0},    {"immaculate", 1.5},  {"pristine", 1.0},
    {"elegant", 1.0},     {"graceful", 1.0},    {"stunning", 1.5},
    {"gorgeous", 1.5},    {"attractive", 1.0},  {"adorable", 1.5},
    {"cute", 1.0},        {"playful", 1.0},     {"witty", 1.0},
    {"engaging", 1.0},    {"captivating", 1.5}, {"compelling", 1.0},
    {"rich", 1.0},        {"rewarding", 1.5},   {"fulfilling", 1.5},
    {"meaningful", 1.0},  {"insightful", 1.0},  {"enlightening", 1.0},
    {"educational", 1.0}, {"informative", 1.0}, {"accurate", 1.0},
    {"correct", 1.0},     {"spot", 1.0},        {"exactly", 1.0},
    {"agree", 1.0},       {"agreeable", 1.0},   {"welcome", 1.0},
    {"welcoming", 1.0},   {"warm", 1.0},        {"bright", 1.0},
    {"shiny", 1.0},       {"sparkling", 1.0},   {"dazzling", 1.5},
    {"radiant", 1.0},     {"glorious", 1.5},    {"heavenly", 1.5},
    {"divine", 1.5},      {"paradise", 1.5},    {"dream", 1.0},
    {"dreamy", 1.0},      {"magical", 1.5},     {"enchanting", 1.5},
    {"wonder", 1.0},      {"wondrous", 1.5},    {"miracle", 1.5},
    {"blessed", 1.5},     {"lucky", 1.0},       {"fortunate", 1.0},
    {"optimistic", 1.0},  {"hopeful", 1.0},     {"promising", 1.0},
    {"thriving", 1.0},    {"flourishing", 1.0}, {"prosperous", 1.0},
};

const TermWeight kNegative[] = {
    {"bad", 1.0},          {"terrible", 2.0},     {"horrible", 2.0},
    {"awful", 2.0},        {"worst", 2.0},        {"worse", 1.5},
    {"hate", 2.0},         {"hated", 2.0},        {"hates", 2.0},
    {"dislike", 1.5},      {"disliked", 1.5},     {"boring", 1.5},
    {"bored", 1.5},        {"dull", 1.0},         {"tedious", 1.0},
    {"annoying", 1.5},     {"annoyed", 1.5},      {"irritating", 1.5},
    {"irritated", 1.5},    {"frustrating", 2.0},  {"frustrated", 2.0},
    {"frustration", 2.0},  {"angry", 2.0},        {"anger", 2.0},
    {"mad", 1.5},          {"furious", 2.0},      {"rage", 2.0},
    {"upset", 1.5},        {"sad", 1.5},          {"unhappy", 1.5},
    {"miserable", 2.0},    {"depressed", 2.0},    {"depressing", 2.0},
    {"disappointed", 1.5}, {"disappointing", 1.5},{"disappointment", 1.5},
    {"useless", 1.5},      {"worthless", 2.0},    {"pointless", 1.5},
    {"stupid", 1.5},       {"dumb", 1.5},         {"idiotic", 2.0},
    {"idiot", 2.0},        {"fool", 1.5},         {"foolish", 1.5},
    {"ridiculous", 1.5},   {"absurd", 1.5},       {"nonsense", 1.5},
    {"nonsensical", 1.5},  {"wrong", 1.0},        {"incorrect", 1.0},
    {"mistake", 1.0},      {"mistaken", 1.0},     {"error", 1.0},
    {"errors", 1.0},       {"fail", 1.5},         {"failed", 1.5},
    {"failing", 1.5},      {"failure", 1.5},      {"broken", 1.5},
    {"broke", 1.0},        {"crash", 1.5},        {"crashed", 1.5},
    {"bug", 1.0},          {"buggy", 1.5},        {"glitch", 1.0},
    {"glitchy", 1.5},      {"slow", 1.0},         {"laggy", 1.0},
    {"confusing", 1.5},    {"confused", 1.5},     {"confusion", 1.5},
    {"unclear", 1.0},      {"vague", 1.0},        {"misunderstand", 1.0},
    {"misunderstood", 1.0},{"misheard", 1.0},     {"ignore", 1.0},
    {"ignored", 1.5},      {"ignoring", 1.5},     {"rude", 1.5},
    {"mean", 1.0},         {"nasty", 1.5},        {"cruel", 2.0},
    {"harsh", 1.0},        {"offensive", 1.5},    {"insult", 1.5},
    {"insulting", 1.5},    {"insulted", 1.5},     {"creepy", 1.5},
    {"weird", 1.0},        {"strange", 1.0},      {"bizarre", 1.0},
    {"gross", 1.5},        {"disgusting", 2.0},   {"disgusted", 2.0},
    {"ugly", 1.5},         {"hideous", 2.0},      {"pathetic", 2.0},
    {"lame", 1.0},         {"cheap", 1.0},        {"shoddy", 1.5},
    {"sloppy", 1.0},       {"messy", 1.0},        {"chaos", 1.0},
    {"chaotic", 1.0},      {"disaster", 2.0},     {"disastrous", 2.0},
    {"catastrophe", 2.0},  {"nightmare", 2.0},    {"dreadful", 2.0},
    {"atrocious", 2.0},    {"abysmal", 2.0},      {"appalling", 2.0},
    {"unacceptable", 1.5}, {"unbearable", 2.0},   {"intolerable", 2.0},
    {"painful", 1.5},      {"pain", 1.0},         {"hurt", 1.0},
    {"hurts", 1.0},        {"suffer", 1.5},       {"suffering", 1.5},
    {"cry", 1.0},          {"crying", 1.0},       {"tears", 1.0},
    {"fear", 1.0},         {"afraid", 1.0},       {"scared", 1.0},
    {"scary", 1.0},        {"terrifying", 1.5},   {"horrifying", 2.0},
    {"worried", 1.0},      {"worry", 1.0},        {"anxious", 1.0},
    {"anxiety", 1.0},      {"stress", 1.0},       {"stressed", 1.0},
    {"stressful", 1.0},    {"tired", 1.0},        {"exhausted", 1.0},
    {"exhausting", 1.0},   {"sick", 1.0},         {"ill", 1.0},
    {"nauseous", 1.0},     {"trash", 1.5},        {"garbage", 1.5},
    {"junk", 1.0},         {"waste", 1.0},        {"wasted", 1.0},
    {"wasting", 1.0},      {"regret", 1.5},       {"regrets", 1.5},
    {"sorry", 1.0},        {"apologize", 1.0},    {"apologies", 1.0},
    {"complaint", 1.0},    {"complain", 1.0},     {"complaining", 1.0},
    {"problem", 1.0},      {"problems", 1.0},     {"issue", 1.0},
    {"issues", 1.0},       {"trouble", 1.0},      {"troubled", 1.0},
    {"difficult", 1.0},    {"hard", 1.0},         {"impossible", 1.0},
    {"hopeless", 1.5},     {"helpless", 1.5},     {"lost", 1.0},
    {"alone", 1.0},        {"lonely", 1.5},       {"abandoned", 1.5},
    {"rejected", 1.5},     {"denied", 1.0},       {"refuse", 1.0},
    {"refused", 1.0},      {"betrayed", 2.0},     {"deceived", 1.5},
    {"lied", 1.5},         {"liar", 2.0},         {"fake", 1.0},
    {"phony", 1.0},        {"fraud", 1.5},        {"scam", 1.5},
    {"suspicious", 1.0},   {"doubt", 1.0},        {"doubtful", 1.0},
    {"uncertain", 1.0},    {"unreliable", 1.0},   {"inferior", 1.0},
    {"mediocre", 1.0},     {"bland", 1.0},        {"stale", 1.0},
    {"repetitive", 1.0},   {"monotonous", 1.0},   {"irrelevant", 1.0},
    {"unrelated", 1.0},    {"random", 1.0},       {"incoherent", 1.5},
    {"gibberish", 1.5},    {"dreary", 1.0},       {"gloomy", 1.0},
    {"grim", 1.0},         {"bleak", 1.0},        {"damn", 1.5},
    {"dammit", 1.5},       {"hell", 1.0},         {"crap", 1.5},
    {"crappy", 1.5},       {"sucks", 1.5},        {"suck", 1.5},
    {"sucked", 1.5},       {"screwed", 1.5},      {"shut", 1.0},
};

}  // namespace

const SentimentLexicon& default_sentiment_lexicon() {
  static const SentimentLexicon lexicon = [] {
    SentimentLexicon lex;
    for (const auto& [term, weight] : kPositive) lex.positive_terms[term] = weight;
    for (const auto& [term, weight] : kNegative) lex.negative_terms[term] = weight;
    lex.validate();
    return lex;
  }();
  return lexicon;
}

const IntentRuleSet& default_intent_rules() {
  static const IntentRuleSet rules = [] {
    IntentRuleSet r;
    r.affirmation_terms = {"yes",       "yeah",        "yep",    "yup",
                           "sure",      "okay",        "ok",     "alright",
                           "absolutely","definitely",  "certainly",
                           "of course", "sounds good", "why not"};
    r.negation_terms = {"no",        "nope",     "nah",     "stop",
                        "don't",     "dont",     "never",   "not really",
                        "no thanks", "no way",   "quit",    "cancel",
                        "enough",    "shut up"};
    r.validate();
    return r;
  }();
  return rules;
}

}  // namespace convsat
