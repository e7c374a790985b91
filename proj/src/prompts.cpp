#include "smrc/llm.hpp"

namespace smrc::llm {

namespace {

const char* const kNodeGeneration = R"PROMPT(You are a high-precision mathematical problem-solving and error-correction engine. Your task is to receive a [Question] and a [Student's Solution Process], and generate a "minimally corrected" correct solution.

[Core Principles]

1.  Identify the Method: First, analyze and understand the problem-solving strategy chosen by the student (e.g., substitution method or elimination by addition/subtraction for systems of equations? Formula method or completing the square for quadratic equations?).

2.  Preserve Correct Parts: Retain, exactly as written,all correct steps in the student's solution process that occurbefore the first error.

3. Correct Within the Chosen Method: Starting from the first error, youmust continue and complete the solution using the strategy already chosen by the student.It is forbidden to switch to a different solution method.

4. Clean Output: Directly output the complete, correct solution process without any explanations, titles, or extraneous text.

Please strictly imitate the following examples when handling the final [Formal Task].

Example 1: Algebraic Operation Error

[Question]&[Student's Solution Process]

Solve the equation: 5(x + 1) - 2 = 23

Solution:

5(x + 1) - 2 = 23

5x + 1 - 2 = 23

5x - 1 = 23

5x = 24

x = 4.8

[Your Output]

Solution:

5(x + 1) - 2 = 23

5x + 5 - 2 = 23

5x + 3 = 23

5x = 20

x = 4

Example 2: Geometric Concept Confusion

[Question]&[Student's Solution Process]

What is the area of a square inscribed in a circle with a radius of 5cm?

Solution:

The radius of the circle r = 5cm.

The diameter of the circle d = 10cm.

The side length of the square a = d = 10cm.

The area of the square S = a² = 10² = 100 cm².

[Your Output]

Solution:

The radius of the circle r = 5cm.

The diameter of the circle d = 10cm.

The diagonal length of this inscribed square is equal to the diameter of the circle, which is 10cm.

Let the side length of the square be a, then a² + a² = 10².

2a² = 100

a² = 50

The area of the square S = a² = 50 cm².

Example 3: Must Adhere to the Student's Chosen Strategy

[Question]&[Student's Solution Process]

Solve the system of equations:

(1) x + y = 3

(2) 2x - y = 6

*(The student chose the "substitution method")*
Solution:

From (1), we get x = 3 + y

Substituting x into (2) gives:

2(3 + y) - y = 6

6 + 2y - y = 6

y = 0

Substituting y=0 into (1) gives x = 3.

So the solution is x=3, y=0.

[Your Output]

*(The model must also use the "substitution method" for correction, not switch to the simpler "elimination by addition/subtraction method")*

Solution:

From (1), we get x = 3 - y

Substituting x into (2) gives:

2(3 - y) - y = 6

6 - 2y - y = 6

6 - 3y = 6

-3y = 0

y = 0

Substituting y=0 into x = 3 - y gives x = 3.

So the solution to the system is x=3, y=0.

[Formal Task]

[Question]&[Student's Solution Process]

{question}

Solution:

{solution}

[Your Output]
)PROMPT";

const char* const kFeedback = R"PROMPT(It seems there might be some issues with your answer. Please review it and provide a new response.)PROMPT";

const char* const kDecomposition = R"PROMPT(Please help me break down the steps in the student's answer and provide them in the following format:

Steps 1:... 

Steps 2:... 

Steps 3:...

The student's answer is as follows:

{student_answer})PROMPT";

// Judge prompts are our own; no published wording exists for them.
const char* const kAccJudge = R"PROMPT(You are grading the final answer of a math solution.

[Question]
{question}

[Reference Answer]
{reference}

[Solution]
{solution}

Does the solution reach the same final answer as the reference answer? Reply with YES or NO as the first word, then a one-sentence reason.)PROMPT";

const char* const kContainmentJudge = R"PROMPT(You are checking whether a step of a student's solution survives in a corrected solution.

[Original Step]
{step}

[Corrected Solution]
{solution}

Does the corrected solution contain this step with the same mathematical content (rewording and formatting changes are allowed)? Reply with YES or NO as the first word, then a one-sentence reason.)PROMPT";

const char* const kStepScorer = R"PROMPT(You are scoring a partial solution to a math problem.

[Question]
{question}

[Partial Solution]
{solution}

How likely is it that these steps are correct and lead to the right final answer? Reply with a single number between -1 (certainly wrong) and 1 (certainly correct).)PROMPT";

}  // namespace

PromptSet PromptSet::defaults() {
  return {kNodeGeneration, kFeedback, kDecomposition, kAccJudge, kContainmentJudge, kStepScorer};
}

}  // namespace smrc::llm
