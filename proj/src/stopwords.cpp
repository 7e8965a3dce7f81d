#include "quretec/text.hpp"

namespace quretec::text {

// Kept byte-identical to data/stopwords.txt; test_text checks the hash.
std::string_view builtin_stopwords() {
  return
      "'d\n'll\n'm\n're\n's\n't\n've\na\n"
      "about\nabove\nacross\nafter\nafterwards\nagain\nagainst\nall\n"
      "almost\nalone\nalong\nalready\nalso\nalthough\nalways\nam\n"
      "among\namongst\nan\nand\nanother\nany\nanybody\nanyhow\n"
      "anyone\nanything\nanyway\nanywhere\nare\naren't\naround\nas\n"
      "at\nbe\nbecame\nbecause\nbecome\nbecomes\nbecoming\nbeen\n"
      "before\nbeforehand\nbehind\nbeing\nbelow\nbeside\nbesides\nbetween\n"
      "beyond\nboth\nbut\nby\ncan\ncan't\ncannot\ncould\n"
      "couldn't\ndid\ndidn't\ndo\ndoes\ndoesn't\ndoing\ndon't\n"
      "done\ndown\nduring\neach\neither\nelse\nelsewhere\nenough\n"
      "etc\neven\never\nevery\neverybody\neveryone\neverything\neverywhere\n"
      "except\nfew\nfor\nformer\nformerly\nfrom\nfurther\nhad\n"
      "hadn't\nhas\nhasn't\nhave\nhaven't\nhaving\nhe\nhence\n"
      "her\nhere\nhereafter\nhereby\nherein\nhereupon\nhers\nherself\n"
      "him\nhimself\nhis\nhow\nhowever\ni\ni'd\ni'll\n"
      "i'm\ni've\nif\nin\nindeed\ninstead\ninto\nis\n"
      "isn't\nit\nit's\nits\nitself\njust\nlatter\nlatterly\n"
      "least\nless\nlest\nlet's\nlike\nlikely\nmade\nmake\n"
      "many\nmay\nmaybe\nme\nmeanwhile\nmight\nmine\nmore\n"
      "moreover\nmost\nmostly\nmuch\nmust\nmustn't\nmy\nmyself\n"
      "n't\nnamely\nneither\nnever\nnevertheless\nnext\nno\nnobody\n"
      "none\nnonetheless\nnoone\nnor\nnot\nnothing\nnow\nnowhere\n"
      "of\noff\noften\non\nonce\nonly\nonto\nor\n"
      "other\nothers\notherwise\nought\nour\nours\nourselves\nout\n"
      "over\nown\nper\nperhaps\nplease\nquite\nrather\nreally\n"
      "s\nsaid\nsame\nsay\nsays\nseem\nseemed\nseeming\n"
      "seems\nseveral\nshall\nshan't\nshe\nshould\nshouldn't\nsince\n"
      "so\nsome\nsomebody\nsomehow\nsomeone\nsomething\nsometime\nsometimes\n"
      "somewhat\nsomewhere\nstill\nsuch\nt\nthan\nthat\nthat's\n"
      "the\ntheir\ntheirs\nthem\nthemselves\nthen\nthence\nthere\n"
      "thereafter\nthereby\ntherefore\ntherein\nthereupon\nthese\nthey\nthey'd\n"
      "they'll\nthey're\nthey've\nthis\nthose\nthough\nthrough\nthroughout\n"
      "thru\nthus\nto\ntogether\ntoo\ntoward\ntowards\nunder\n"
      "unless\nuntil\nunto\nup\nupon\nus\nvery\nvia\n"
      "was\nwasn't\nwe\nwe'd\nwe'll\nwe're\nwe've\nwell\n"
      "were\nweren't\nwhat\nwhatever\nwhen\nwhence\nwhenever\nwhere\n"
      "whereafter\nwhereas\nwhereby\nwherein\nwhereupon\nwherever\nwhether\nwhich\n"
      "whichever\nwhile\nwhither\nwho\nwhoever\nwhole\nwhom\nwhose\n"
      "why\nwill\nwith\nwithin\nwithout\nwon't\nwould\nwouldn't\n"
      "yet\nyou\nyou'd\nyou'll\nyou're\nyou've\nyour\nyours\n"
      "yourself\nyourselves\n"
      ;
}

}  // namespace quretec::text
